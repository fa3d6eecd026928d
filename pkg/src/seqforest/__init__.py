"""Sequential learning with random forests, least-confidence scoring of Sobol points and nearest-candidate matching."""

from .acquisition import acquire, least_confidence, nearest_candidate, select_ideal
from .dataset import MELT_POOL_SCHEMA, Dataset, FeatureSchema, load_dataset, partition
from .ensembles import ClassifierSpec, fit_model
from .evaluation import confusion_matrix, evaluate, grid_search, metrics_from_matrix
from .forest import Forest, ForestParams, forest_fit, forest_predict, forest_proba
from .seqloop import LoopConfig, aggregate_runs, run_baseline, run_pair, run_sequential
from .sobol import SobolStream, sobol_points

__version__ = "0.1.0"
