"""Linear transfers, max-plus operators and weak KAM theory on finite spaces."""
from .core import (AffineShift, ConvexEnergy, Entropic, FillingScheme, KantorovichOp, Markov,
                   MaxPlusCost, MinPlusForward, Recession, Reduite, check_axioms, combine,
                   compose, filling_scheme_iterate, reduite_fixed_point, scale)
from .entropic import MarkovSemigroup, schrodinger_duality, sinkhorn_solve
from .ergopt import build_sft, ergodic_value, holonomic_lp, stochastic_holonomic_lp, subaction
from .errors import *  # noqa: F401,F403
from .mather import (convergence_diagnostics, dual_certificate, mather_certificate,
                     mather_constant_cycle, mather_constant_lp)
from .minplus import backward_apply, convolve, forward_apply, kleene_plus, power
from .transfers import ConvexEnergyKL, CostOT, PointMap, TransferSet, dual_value, transfer_value
from .weakkam import conjugate_pair, critical_periods, peierls_barrier, weak_kam_bundle

__version__ = "0.1.0"
