"""Constants for the market pool engine."""
import voluptuous as vol

FORMAT_VERSION = 1

BELIEF_TOLERANCE = 1e-12
LOG_FLOOR = 1e-300
MAX_GOODS = 2**20

DEFAULT_EPSILON = 0.05
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERATIONS = 10000
DEFAULT_DAMPING = 0.5
DEFAULT_JACOBIAN_STEP = 1e-5
MIN_DAMPING = 1e-12

PRICE_DIGITS = 12
GAP_THRESHOLD = 1e-6

KIND_LOG_UTILITY = "log_utility"
KIND_EXP_UTILITY = "exp_utility"
KIND_ISOELASTIC_UTILITY = "isoelastic_utility"
KIND_CONSTANT_BET = "constant_bet"
KIND_LINEAR_BET = "linear_bet"
KIND_AGGRESSIVE_BET = "aggressive_bet"

UTILITY_KINDS = (KIND_LOG_UTILITY, KIND_EXP_UTILITY, KIND_ISOELASTIC_UTILITY)
BETTING_KINDS = (KIND_CONSTANT_BET, KIND_LINEAR_BET, KIND_AGGRESSIVE_BET)
ALL_KINDS = UTILITY_KINDS + BETTING_KINDS

# Kinds whose demand scales with the agent's wealth
WEALTH_PROPORTIONAL_KINDS = (KIND_LOG_UTILITY, KIND_ISOELASTIC_UTILITY) + BETTING_KINDS

METHOD_AUTO = "auto"
METHOD_ANALYTIC = "analytic"
METHOD_FIXED_POINT = "fixed_point"
METHOD_NUMERIC = "numeric"
METHOD_ISOELASTIC = "isoelastic"
METHOD_PARIMUTUEL = "parimutuel"
SOLVE_METHODS = [
    METHOD_AUTO,
    METHOD_ANALYTIC,
    METHOD_ISOELASTIC,
    METHOD_PARIMUTUEL,
    METHOD_NUMERIC,
]

MODE_ONLINE = "online"
MODE_BATCH = "batch"

ORACLE_WEIGHTED_AVERAGE = "weighted-average"
ORACLE_PRODUCT = "product"

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NUMERIC_FAILURE = 3

ATTR_FORMAT_VERSION = "format_version"
ATTR_SPACE = "space"
ATTR_VARIABLES = "variables"
ATTR_OUTCOMES = "outcomes"
ATTR_NAME = "name"
ATTR_CARDINALITY = "cardinality"
ATTR_AGENTS = "agents"
ATTR_ID = "id"
ATTR_WEALTH = "wealth"
ATTR_BEHAVIOR = "behavior"
ATTR_KIND = "kind"
ATTR_ETA = "eta"
ATTR_EPSILON = "epsilon"
ATTR_BELIEF = "belief"
ATTR_TABLE = "table"
ATTR_SUBSPACE = "subspace"
ATTR_BELIEFS = "beliefs"
ATTR_LABEL = "label"

CONF_TOLERANCE = "tolerance"
CONF_MAX_ITERATIONS = "max_iterations"
CONF_DAMPING = "damping"

TRACE_COLUMNS = ["step", "agent_id", "wealth", "price_at_label"]


def ensure_unique(key: str):
    """Return a validator rejecting list entries that repeat ``key``."""

    def validate(value: list[dict]) -> list[dict]:
        seen = [entry[key] for entry in value]
        if len(set(seen)) != len(seen):
            raise vol.Invalid(f"every entry must have a unique {key}")
        return value

    return validate


def exactly_one_of(*keys: str):
    """Return a validator requiring exactly one of ``keys`` in a mapping."""

    def validate(value: dict) -> dict:
        if sum(key in value for key in keys) != 1:
            raise vol.Invalid(f"exactly one of {', '.join(keys)} is required")
        return value

    return validate


PROBABILITY_TABLE = vol.All([vol.Coerce(float)], vol.Length(min=1))

VARIABLE_SCHEMA = vol.Schema(
    {
        vol.Required(ATTR_NAME): vol.All(str, vol.Length(min=1)),
        vol.Required(ATTR_CARDINALITY): vol.All(int, vol.Range(min=2)),
    }
)

SPACE_SCHEMA = vol.All(
    vol.Schema(
        {
            vol.Optional(ATTR_VARIABLES): vol.All(
                [VARIABLE_SCHEMA], vol.Length(min=1), ensure_unique(ATTR_NAME)
            ),
            vol.Optional(ATTR_OUTCOMES): vol.All(
                [vol.Coerce(str)], vol.Length(min=2), vol.Unique()
            ),
        }
    ),
    exactly_one_of(ATTR_VARIABLES, ATTR_OUTCOMES),
)

BEHAVIOR_SCHEMA = vol.Schema(
    {
        vol.Required(ATTR_KIND): vol.In(ALL_KINDS),
        vol.Optional(ATTR_ETA): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional(ATTR_EPSILON): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=1, min_included=False)
        ),
    }
)

BELIEF_SCHEMA = vol.Schema(
    {
        vol.Required(ATTR_TABLE): PROBABILITY_TABLE,
        vol.Optional(ATTR_SUBSPACE): vol.All([str], vol.Length(min=1), vol.Unique()),
    }
)

AGENT_SCHEMA = vol.Schema(
    {
        vol.Required(ATTR_ID): vol.Coerce(str),
        vol.Required(ATTR_WEALTH): vol.All(vol.Coerce(float), vol.Range(min=0)),
        vol.Required(ATTR_BEHAVIOR): BEHAVIOR_SCHEMA,
        vol.Required(ATTR_BELIEF): BELIEF_SCHEMA,
    }
)

MARKET_FILE_SCHEMA = vol.Schema(
    {
        vol.Required(ATTR_FORMAT_VERSION): vol.All(int, vol.In([FORMAT_VERSION])),
        vol.Required(ATTR_SPACE): SPACE_SCHEMA,
        vol.Required(ATTR_AGENTS): vol.All(
            [AGENT_SCHEMA], vol.Length(min=1), ensure_unique(ATTR_ID)
        ),
    }
)

DATASET_RECORD_SCHEMA = vol.Schema(
    {
        vol.Required(ATTR_BELIEFS): vol.All([PROBABILITY_TABLE], vol.Length(min=1)),
        vol.Required(ATTR_LABEL): vol.All(int, vol.Range(min=0)),
    },
    extra=vol.ALLOW_EXTRA,
)

SOLVER_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_TOLERANCE, default=DEFAULT_TOLERANCE): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional(CONF_MAX_ITERATIONS, default=DEFAULT_MAX_ITERATIONS): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_DAMPING, default=DEFAULT_DAMPING): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=1, min_included=False)
        ),
    }
)
