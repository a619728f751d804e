"""Estimators and sensitivity calculations for the clock-based tests."""
from .anomaly import AnomalyData, anomaly_mapping, fit_onset, simulate_anomaly_data
from .clock_tests import (ClockComparison, DriftCampaigns, alpha_variation, clock_comparison,
                          constants_drift, drift_campaigns, lorentz_test, redshift_test)
from .conjunction import ConjunctionGeometry, ConjunctionNoise, ppn_gamma_conjunction, simulate_conjunction
from .estimation import EstimationResult, LinearProblem
from .gw import GWSensitivity, gw_sensitivity, strain_asd
from .kuiper import KboSensitivity, KuiperBeltModel, kbo_crossover_and_mass, kuiper_potential
from .scenarios import AcesScenario, SagasScenario

__all__ = [
    "AcesScenario", "AnomalyData", "ClockComparison", "ConjunctionGeometry", "ConjunctionNoise",
    "DriftCampaigns", "EstimationResult", "GWSensitivity", "KboSensitivity", "KuiperBeltModel",
    "LinearProblem", "SagasScenario", "alpha_variation", "anomaly_mapping", "clock_comparison",
    "constants_drift", "drift_campaigns", "fit_onset", "gw_sensitivity", "kbo_crossover_and_mass",
    "kuiper_potential", "lorentz_test", "ppn_gamma_conjunction", "redshift_test",
    "simulate_anomaly_data", "simulate_conjunction", "strain_asd",
]
