"""Catalogue of the 28 integrated-table variables (id 1 is the label)."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Variable:
    var_id: int
    name: str
    description: str
    kind: str   # "label", "pct", "count", "density", "binary", "ms", "days"

    @property
    def column(self):
        return f"v{self.var_id}_{self.name}"


VARIABLES = (
    Variable(1, "label", "Damaged (1) / undamaged (0)", "label"),
    Variable(2, "pct_white", "% population White", "pct"),
    Variable(3, "pct_latino", "% Latino", "pct"),
    Variable(4, "pct_african", "% African", "pct"),
    Variable(5, "pct_asian", "% Asian", "pct"),
    Variable(6, "pct_indian", "% Indian", "pct"),
    Variable(7, "pct_other", "% Other", "pct"),
    Variable(8, "population", "Population", "count"),
    Variable(9, "population_density", "Population density", "density"),
    Variable(10, "pct_under_5", "% population < 5 years", "pct"),
    Variable(11, "pct_over_65", "% population > 65 years", "pct"),
    Variable(12, "pct_no_vehicle", "% population no vehicle", "pct"),
    Variable(13, "pct_public_assistance", "% population public assistance", "pct"),
    Variable(14, "pct_limited_english", "% population limited English", "pct"),
    Variable(15, "pct_disability", "% population disability", "pct"),
    Variable(16, "pct_health_insurance", "% population health insurance", "pct"),
    Variable(17, "pct_renter_occupied", "% renter occupied housing", "pct"),
    Variable(18, "pct_rent_burden", "% income for renting > 30%", "pct"),
    Variable(19, "pct_single_65_rented", "% single > 65 years (rented)", "pct"),
    Variable(20, "pct_single_65_owned", "% single > 65 years (owned)", "pct"),
    Variable(21, "pct_below_high_school", "% < High School", "pct"),
    Variable(22, "unemployment_rate", "Unemployment rate", "pct"),
    Variable(23, "pct_below_poverty", "% < poverty level", "pct"),
    Variable(24, "urban", "Urban (1) / rural (0)", "binary"),
    Variable(25, "customers", "Number of customers", "count"),
    Variable(26, "current_max_v3", "Current maximum velocity", "ms"),
    Variable(27, "past_max_v3", "Past maximum velocity", "ms"),
    Variable(28, "recovery_days", "Recovery time from maximum impact", "days"),
)

BY_ID = {v.var_id: v for v in VARIABLES}
BY_NAME = {v.name: v for v in VARIABLES}
SOCIO_IDS = tuple(range(2, 24))
FEATURE_IDS = tuple(range(2, 29))
FEATURE_NAMES = tuple(BY_ID[i].name for i in FEATURE_IDS)


def feature_index(name_or_id):
    """Column index in the 27-feature matrix for a variable name or id."""
    var = BY_NAME[name_or_id] if isinstance(name_or_id, str) else BY_ID[int(name_or_id)]
    if var.var_id == 1:
        raise KeyError("the label is not a feature")
    return var.var_id - 2
