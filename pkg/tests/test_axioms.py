import random

from fairbargain.axioms import (
    is_symmetric_set,
    random_bargaining_set,
    random_cases,
    verify_axioms,
)
from fairbargain.hull import comprehensive_hull, ebs_discrete


def test_ebs_passes_all_axioms_on_random_cases():
    cases = random_cases(200, seed=42, bounding_box=50)
    report = verify_axioms(ebs_discrete, cases)
    assert report.total_violations == 0
    # the symmetry axiom must actually have been exercised
    assert report.checked["symmetry"] >= 20
    assert report.checked["weak_pareto"] == 200


def test_constant_d_solution_fails_weak_pareto():
    bad = lambda bset: bset.d
    case = comprehensive_hull([(1, 1)], (0, 0))
    report = verify_axioms(bad, [case])
    assert report.violation_count("weak_pareto") == 1


def test_greedy_player_zero_fails_symmetry():
    def greedy(bset):
        # hand everything to player 0: the generator with the largest first coordinate
        return max(bset.generators)

    cases = [random_bargaining_set(random.Random(i), symmetric=True) for i in range(30)]
    report = verify_axioms(greedy, cases)
    assert report.violation_count("symmetry") > 0


def test_nested_sets_componentwise_ordered():
    rng = random.Random(17)
    for _ in range(40):
        d = (rng.randint(0, 3), rng.randint(0, 3))
        inner_pts = [(d[0] + rng.randint(1, 10), d[1] + rng.randint(1, 10)) for _ in range(3)]
        inner = comprehensive_hull(inner_pts, d)
        extra = [(p[0] + rng.randint(0, 6), p[1] + rng.randint(0, 6)) for p in inner_pts]
        outer = comprehensive_hull(inner_pts + extra, d)
        a = ebs_discrete(inner)
        b = ebs_discrete(outer)
        assert all(x <= y for x, y in zip(a, b))


def test_symmetric_detection():
    sym = comprehensive_hull([(3, 1), (1, 3)], (0, 0))
    asym = comprehensive_hull([(3, 1)], (0, 0))
    assert is_symmetric_set(sym)
    assert not is_symmetric_set(asym)


def test_report_summary_readable():
    cases = random_cases(5, seed=1)
    report = verify_axioms(ebs_discrete, cases)
    text = report.summary()
    for axiom in ("symmetry", "weak_pareto", "strong_monotonicity", "translation_invariance"):
        assert axiom in text
