"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures to
its documented exit statuses (2 config, 3 data, 4 internal).
"""


class GridfallError(Exception):
    exit_code = 4

    @property
    def kind(self):
        return type(self).__name__


class ConfigInvalid(GridfallError):
    exit_code = 2


class DataError(GridfallError, ValueError):
    exit_code = 3


class MalformedRow(DataError):
    def __init__(self, line, reason, path=None):
        self.line = line
        self.reason = reason
        self.path = path
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {reason}")


class CustomersExceedTotal(MalformedRow):
    def __init__(self, line, path=None):
        super().__init__(line, "customers_out exceeds customers_total", path)


class MissingVariableId(DataError):
    def __init__(self, county, var_id, acs_year=None):
        self.county, self.var_id, self.acs_year = county, var_id, acs_year
        super().__init__(f"county {county} (acs {acs_year}) lacks variable id {var_id}")


class EmptyPixelList(DataError):
    def __init__(self, county):
        self.county = county
        super().__init__(f"county {county} has no grid pixels")


class UnknownCounty(DataError):
    def __init__(self, source, county):
        self.source, self.county = source, county
        super().__init__(f"county {county} not found in {source}")


class NoReports(DataError):
    def __init__(self, county, hurricane):
        self.county, self.hurricane = county, hurricane
        super().__init__(f"no outage reports for county {county} in {hurricane}")


class NoGridCoverage(DataError):
    def __init__(self, county, at):
        self.county, self.at = county, at
        super().__init__(f"no gust samples for county {county} at {at}")


class NegativeInterval(DataError):
    pass


class MissingHazard(DataError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"no hazard features for {key}")


class MissingSocio(DataError):
    def __init__(self, county, acs_year):
        self.county, self.acs_year = county, acs_year
        super().__init__(f"no socioeconomic rows for county {county}, acs year {acs_year}")


class DuplicateKey(DataError):
    pass


class TooFewRecords(DataError):
    pass


class TooFewSamples(DataError):
    pass


class ForestTrainMismatch(DataError):
    pass


class NoOobCoverage(DataError):
    pass


class ScheduleInfeasible(DataError):
    pass


class LengthMismatch(DataError):
    pass


class SingleClassLabels(DataError):
    pass


class IoFailure(GridfallError):
    exit_code = 3


class IterationFailed(GridfallError):
    """Wraps an error raised inside one experiment iteration."""

    def __init__(self, iteration, cause):
        self.iteration = iteration
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 4)
        super().__init__(f"iteration {iteration}: {cause.__class__.__name__}: {cause}")
