"""Compress-forward relay-eavesdropper secrecy toolkit."""

from .errors import (ConfigurationError, InternalAssertionError, ParseError, RelsecError, UsageError,
                     ValidationError)
from .prob import (ChannelSpec, InfoQuantities, InputDesign, JointDistribution, assemble_joint,
                   compute_info_quantities, info_quantities, mutual_information, validate_channel,
                   validate_design)
from .regime import (BobStrategy, EveStrategy, Leaf, OracleConfig, RateChoice, RegimeCase, best_case_rate,
                     bob_sum_rate, case_rate, classify, evaluate_rate_point, eve_rate, oracle_max_rate)

__version__ = "0.1.0"
