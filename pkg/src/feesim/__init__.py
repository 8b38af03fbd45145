"""Payment-channel network simulator and fee-setting RL environment."""

from ._kernel import BACKEND as KERNEL_BACKEND
from .env import ActionSpace, EnvConfig, FeeEnv, StepResult, compute_reward, make_env
from .errors import (
    ConfigError,
    DimensionMismatchError,
    EmptySnapshotError,
    FeesimError,
    MalformedLineError,
    MalformedRecordError,
    ManualSumMismatchError,
    NodeHasNoChannelsError,
    NoEligibleReceiverError,
    StaleRouteError,
    UnknownCenterError,
)
from .graph import AmountGraph, NetworkGraph, build_amount_graph, compute_fee, localize, ppm_fee
from .routing import Route, TransactionOutcome, TxStatus, find_cheapest_route, settle_transaction
from .simulate import SimulationReport, simulate_round
from .snapshot import (
    BalanceInitMode,
    ChannelRecord,
    FeePolicy,
    HalfHalf,
    Manual,
    MerchantFile,
    PaymentChannel,
    UniformRandom,
    aggregate_channels,
    channel_to_records,
    init_balances,
    parse_merchants,
    parse_snapshot,
)
from .traffic import (
    Transaction,
    TrafficEntry,
    TrafficSpec,
    default_traffic,
    generate_transactions,
    sample_receiver,
)

__version__ = "0.1.0"
