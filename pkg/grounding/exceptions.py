from django.core.exceptions import ObjectDoesNotExist, ValidationError


class TempSampError(ValidationError):
    """
    Base for every rule violation raised by the grounding and optimization apps.
    Each subclass carries a stable ``code`` so callers can branch without
    matching on message text.
    """

    default_code = "invalid"

    def __init__(self, message, code=None, params=None):
        super().__init__(message, code=code or self.default_code, params=params)


# temporal values
class OrderViolation(TempSampError):
    default_code = "order_violation"


class NegativeTime(TempSampError):
    default_code = "negative_time"


class InvalidRewardGroup(TempSampError):
    default_code = "invalid_reward_group"


# reward kernels
class LengthMismatch(TempSampError):
    default_code = "length_mismatch"


class ClipLenMismatch(TempSampError):
    default_code = "clip_len_mismatch"


class SchemaMismatch(TempSampError):
    default_code = "schema_mismatch"


# advantage estimation
class OutOfRange(TempSampError):
    default_code = "out_of_range"


class NoOffPolicyEntry(TempSampError):
    default_code = "no_off_policy_entry"


class TooFewOnPolicy(TempSampError):
    default_code = "too_few_on_policy"


class DegenerateSample(TempSampError):
    default_code = "degenerate_sample"


# policy
class DimensionMismatch(TempSampError):
    default_code = "dimension_mismatch"


class IndexOutOfRange(TempSampError):
    default_code = "index_out_of_range"


class NoSalientClips(TempSampError):
    default_code = "no_salient_clips"


# metrics / config
class UnrankedPredictions(TempSampError):
    default_code = "unranked_predictions"


class ConfigInvalid(TempSampError):
    default_code = "config_invalid"


class MissingGroundTruth(ObjectDoesNotExist):
    pass


class MissingReference(ObjectDoesNotExist):
    pass
