"""Input-validation helpers used across the package.

Small and boring on purpose. All failures raise ValidationError (a
ValueError subclass) with the offending name in the message.
"""

import math

from .errors import ValidationError


def check_scalar(name, value, *, minimum=None, maximum=None, allow_inf=False):
    """Coerce to float and range-check. Returns the float."""
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if math.isnan(v):
        raise ValidationError(f"{name} must not be NaN")
    if not allow_inf and math.isinf(v):
        raise ValidationError(f"{name} must be finite, got {v}")
    if minimum is not None and v < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {v}")
    if maximum is not None and v > maximum:
        raise ValidationError(f"{name} must be <= {maximum}, got {v}")
    return v


def check_int(name, value, *, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_rate_match(expected_rate, waveform):
    if waveform.sample_rate != expected_rate:
        raise ValidationError(
            f"sample rate mismatch: oracle expects {expected_rate} Hz, "
            f"waveform has {waveform.sample_rate} Hz"
        )


def check_monotone(name, values):
    """Strictly increasing or strictly decreasing."""
    vs = [check_scalar(f"{name}[{i}]", v) for i, v in enumerate(values)]
    if len(vs) >= 2:
        diffs = [b - a for a, b in zip(vs, vs[1:])]
        if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ValidationError(f"{name} must be strictly monotone, got {vs}")
    return vs
