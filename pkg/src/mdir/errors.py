"""Exception hierarchy.

Every domain error carries a CLI exit code so the front end can map
failures without a lookup table.
"""


class MdirError(Exception):
    exit_code = 1


class DataError(MdirError):
    exit_code = 3


class EmptyGroup(DataError):
    pass


class BadLabelCardinality(DataError):
    pass


class NegativeTime(DataError):
    pass


class BadStatus(DataError):
    pass


class ParseError(DataError):
    pass


class NoEvents(DataError):
    pass


class TooManyAssignments(DataError):
    pass


class WeightError(MdirError):
    exit_code = 2


class DegreeTooLarge(WeightError):
    pass


class OutOfDomain(WeightError):
    pass


class TooManyWeights(WeightError):
    pass


class NegativeHazard(WeightError):
    pass


class ConfigError(MdirError):
    exit_code = 2


class NumericError(MdirError):
    exit_code = 4


class NoConvergence(NumericError):
    pass


class QuadratureFailure(NumericError):
    pass


class DegenerateStatistic(NumericError):
    pass
