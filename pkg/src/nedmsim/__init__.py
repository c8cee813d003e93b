"""Spin-flip statistics and bound-setting for dipole-moment searches.

The package splits into value-level physics (quantities, spin_dynamics,
weak_measurement), Monte Carlo machinery (streams, ensemble,
comagnetometer), statistical inference (inference), and the file/CLI
surface (formats, config, cli).
"""

__version__ = "0.1.0"

from .comagnetometer import (
    CampaignConfig,
    CycleRecord,
    extract_dn_pair,
    ratio_r,
    run_campaign,
    simulate_cycle,
)
from .ensemble import (
    EnsembleRun,
    expected_stochastic_fraction,
    simulate_quantum,
    simulate_stochastic,
)
from .inference import (
    CampaignEstimate,
    FitResult,
    FlipDataset,
    NonConvergenceError,
    SearchBox,
    campaign_estimator,
    fit,
    log_likelihood,
    upper_bound,
)
from .quantities import (
    PhysicalConstants,
    PulseProfile,
    UnitSystem,
    phase_factor,
    xi_from_pulse,
)
from .spin_dynamics import (
    RamseyConfig,
    Spinor,
    asymmetry,
    larmor_frequencies,
    ramsey_phase,
    ramsey_up_probability_spinor,
    rotate,
    up_probability,
)
from .weak_measurement import (
    DipoleState,
    QuadratureSpec,
    flip_probability,
    flip_probability_quadrature,
    flip_probability_trapezoid,
    wigner_eckart_dipole,
)

__all__ = [
    "__version__",
    "CampaignConfig",
    "CampaignEstimate",
    "CycleRecord",
    "DipoleState",
    "EnsembleRun",
    "FitResult",
    "FlipDataset",
    "NonConvergenceError",
    "PhysicalConstants",
    "PulseProfile",
    "QuadratureSpec",
    "RamseyConfig",
    "SearchBox",
    "Spinor",
    "UnitSystem",
    "asymmetry",
    "campaign_estimator",
    "expected_stochastic_fraction",
    "extract_dn_pair",
    "fit",
    "flip_probability",
    "flip_probability_quadrature",
    "flip_probability_trapezoid",
    "larmor_frequencies",
    "log_likelihood",
    "phase_factor",
    "ramsey_phase",
    "ramsey_up_probability_spinor",
    "ratio_r",
    "rotate",
    "run_campaign",
    "simulate_cycle",
    "simulate_quantum",
    "simulate_stochastic",
    "up_probability",
    "upper_bound",
    "wigner_eckart_dipole",
    "xi_from_pulse",
]
