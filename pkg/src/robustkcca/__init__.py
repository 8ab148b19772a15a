"""Robust kernel mean elements, kernel (cross-)covariance operators, kernel CCA
and its influence functions."""

from .kernels import (KernelSpec, GramMatrix, CenteredGram, eval_kernel, median_bandwidth, gram,
                      cross_gram, center_weighted, center_test, uniform_weights)
from .robust import (RobustLoss, KirwlsResult, DualOperator, loss_weight, kirwls, kirwls_mean,
                     robust_center, kirwls_cco, robust_central_moment, hs_norm)
from .kcca import KccaModel, fit_weighted, classical_kcca, robust_kcca, canonical_variates
from .influence import (InfluenceRecord, eif_kernel_me, eif_cross_raw_moment, eif_kernel_cco,
                        eif_kcca, eif_kcca_rows, index_plot_data, gateaux_oracle)

__version__ = "0.1.0"
