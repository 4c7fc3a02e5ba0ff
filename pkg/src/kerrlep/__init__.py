"""Liouvillian exceptional-point physics of a driven-dissipative Kerr-cat qubit.

Layers, bottom up:

``fock``        truncated-oscillator operators, coherent/cat states,
                closed-form displacement and displaced-parity machinery
``params``      physical knobs and derived cat-basis combinations
``liouville``   the 4x4 cat-basis generator, closed-form spectrum,
                exceptional-point detuning and spectral time evolution
``lindblad``    full master-equation integration (the independent oracle)
``observables`` Bloch projection, Wigner functions, Uhlmann fidelity and the
                coherence phase-difference order parameter
``experiments`` deterministic file-emitting sweeps behind each figure
``cli``         command-line front end
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, IntegrationFailureError,
                     InvalidSpaceError, InvalidStateError, KerrlepError,
                     NoExceptionalPointError, NumericFailureError,
                     ProjectionError, RegimeError, StiffnessError,
                     TruncationError, UndefinedPhaseError)
from .fock import FockDensityMatrix, TruncatedSpace
from .lindblad import IntegratorControls, JumpOperator, TrajectorySample
from .liouville import (EffectiveLiouvillian, LiouvillianSpectrum,
                        closed_form_spectrum, effective_evolve,
                        effective_liouvillian, initial_qubit_state,
                        lep_detuning, numeric_spectrum)
from .observables import (BlochVector, GridSpec, QubitDensityMatrix,
                          WignerGrid, bloch, phase_difference,
                          project_to_cat_subspace, uhlmann_fidelity, wigner)
from .params import CatBasisParams, SystemParams, cat_basis_params, reference_params

__all__ = [
    "BlochVector", "CatBasisParams", "ConfigError", "ConvergenceError",
    "EffectiveLiouvillian", "FockDensityMatrix", "GridSpec",
    "IntegrationFailureError", "IntegratorControls", "InvalidSpaceError",
    "InvalidStateError", "JumpOperator", "KerrlepError", "LiouvillianSpectrum",
    "NoExceptionalPointError", "NumericFailureError", "ProjectionError",
    "QubitDensityMatrix", "RegimeError", "StiffnessError", "SystemParams",
    "TrajectorySample", "TruncatedSpace", "TruncationError",
    "UndefinedPhaseError", "WignerGrid", "bloch", "cat_basis_params",
    "closed_form_spectrum", "effective_evolve", "effective_liouvillian",
    "initial_qubit_state", "lep_detuning", "numeric_spectrum", "reference_params",
    "phase_difference", "project_to_cat_subspace", "uhlmann_fidelity", "wigner",
]
