"""Built-in Haiti cholera workloads: geography, vaccine efficacy, vaccination
scenarios, and the three transmission models."""

from . import model1, model2, model3
from .efficacy import AGE_CORRECTION, EfficacyCurve, default_curve
from .geography import DEPARTMENTS, GeographyData, national_population, synthetic_geography
from .scenarios import (
    CampaignRow,
    ScenarioSpec,
    VaccinationSchedule,
    apply_vaccination_scenario,
    builtin_scenario,
    empty_schedule,
)

__all__ = [
    "AGE_CORRECTION",
    "CampaignRow",
    "DEPARTMENTS",
    "EfficacyCurve",
    "GeographyData",
    "ScenarioSpec",
    "VaccinationSchedule",
    "apply_vaccination_scenario",
    "builtin_scenario",
    "default_curve",
    "empty_schedule",
    "model1",
    "model2",
    "model3",
    "national_population",
    "synthetic_geography",
]
