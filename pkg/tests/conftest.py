import pytest

from fairbargain.core import BargainingProblem, Scenario


@pytest.fixture
def car_scenario() -> Scenario:
    """The shipped used-car scenario: floor $12,500, ceiling $13,500,
    disagreement $100 each, advertised range $11,250 to $14,750."""
    return Scenario(
        name="used_car",
        problem=BargainingProblem.from_reservations(1250000, 1350000, (10000, 10000)),
        initial_price_range=(1125000, 1475000),
        min_market_price=1100000,
    )


@pytest.fixture
def table_scenario() -> Scenario:
    """Variant with the advertised range anchored at $11,000, as in the
    opening-move examples."""
    return Scenario(
        name="car_wide",
        problem=BargainingProblem.from_reservations(1250000, 1350000, (10000, 10000)),
        initial_price_range=(1100000, 1475000),
    )
