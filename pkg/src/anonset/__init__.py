"""Sender anonymity set simulation and analysis for credit-network payments."""

__version__ = "0.1.0"

from .buckets import (
    IDENTITY,
    SCALED_CHEAP,
    SCALED_EXPENSIVE,
    BucketStrategy,
    bucket_cheap,
    bucket_expensive,
    bucket_fixed,
    fixed,
    parse_strategy,
)
from .model import DataError, Payment, PaymentTable, SimConfig, TimeMapping, seconds_per_tick
from .synth import SenderModel, ValueModel, generate_stream, sample_value

__all__ = [
    "__version__",
    "BucketStrategy",
    "DataError",
    "IDENTITY",
    "Payment",
    "PaymentTable",
    "SCALED_CHEAP",
    "SCALED_EXPENSIVE",
    "SenderModel",
    "SimConfig",
    "TimeMapping",
    "ValueModel",
    "bucket_cheap",
    "bucket_expensive",
    "bucket_fixed",
    "fixed",
    "generate_stream",
    "parse_strategy",
    "sample_value",
    "seconds_per_tick",
]
