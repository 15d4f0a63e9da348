"""Structure-aware randomised smoothing certificates for graph classifiers."""
from .graph import (GraphBits, InvalidInputError, ResourceLimitError, decode_graph, encode_graph,
                    region_distances)
from .partition import (NOISE_FREE, NodePairPartition, build_partition, isotropic_partition,
                        motif_partition, sparsity_aware_partition)
from .smoothing import LabelDistribution, NoiseSpec, estimate_label_distribution, sample_noise
from .stats import ConfidenceBounds, bound_top_two, clopper_pearson_lower, clopper_pearson_upper
from .engine import (CertificationGrid, Cells, RegionCell, certification_grid, certify,
                     enumerate_cells, greedy_lp_lower, greedy_lp_upper, margin, region_mass)

__version__ = "0.1.0"
