"""Fairness-targeting negotiation engine.

Computes egalitarian bargaining targets, searches human-looking offers with
a value-guided tree search, trains the value model by self-play, and ships
an opponent arena, an HTTP session service, and a CLI around the agent.
"""

from .core import (
    Allocation,
    BargainingProblem,
    InfeasibleProblemError,
    Scenario,
    SurplusBelief,
    builtin_scenarios,
    ebs,
    ebs_price,
    get_scenario,
    is_full_split_equilibrium,
    load_scenario,
    subgame_reward,
    update_surplus_estimate,
)
from .game import (
    ActKind,
    DialogueAct,
    NegotiationState,
    Role,
    SubgameSchedule,
    SubgameView,
    counteroffer,
    initial_state,
)
from .hull import DiscreteBargainingSet, comprehensive_hull, ebs_discrete
from .axioms import AxiomReport, random_cases, verify_axioms
from .search import SearchConfig, SearchResult, run_search, ucb_score, backpropagate
from .proposer import RemoteModelConfig, RemoteProposer, RuleBasedProposer, parse_offers
from .value_model import (
    EncodingConfig,
    MidpointProjectionValue,
    NetworkValue,
    ValueNetwork,
    encode_state,
)
from .agent import AgentAction, MessageEnvelope, NegotiationAgent, extract_act, realize

__version__ = "0.1.0"
