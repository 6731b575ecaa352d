"""Ball-basis harmonic analysis on finite weighted point spaces."""
from __future__ import annotations

__version__ = "0.1.0"

from .basis import (AxiomReport, Ball, BallBasis, balls_containing, build_dyadic,
                    build_intervals, build_martingale, verify_axioms)
from .covering import (BalancedCover, CalderonTree, WellBalancedBall, balanced_cover,
                       besicovitch_select, calderon_tree, density_check, well_balanced)
from .errors import (AlgorithmFailure, BallBasisError, DegenerateWeightError, DomainError,
                     ParameterError, PreconditionError, ResourceError, StructuralError)
from .functionals import (FunctionalConfig, avg, inf_alpha, inf_ball, local_sharp_maximal,
                          maximal, median, osc, osc_alpha, sharp_avg, sharp_maximal,
                          starred_avg, starred_sharp)
from .operators import (FrequencyFamily, OperatorSpec, apply, localization_estimate,
                        weak_norm_estimate)
from .space import (MeasurableSet, PointSpace, WeightMeasure, lp_norm, measure, restrict,
                    superlevel_set)
from .verify import (domination_profile, exp_tail_bo, exp_tail_report, good_lambda_bo,
                     good_lambda_report, norm_comparison, sharp_domination_check)
from .weights import AinftyReport, ainfty_check, certify, make_weight
