"""Experiment drivers, configuration and CSV input/output."""

from .config import ExperimentConfig, build_config, parse_kernel
from .io import TabularResult, dataset_table, emit_csv, ingest_dataset, to_csv
from .runs import (knn_predict, run_classify, run_cov_accuracy, run_experiment, run_if_ratio,
                   run_index_plot, run_norm_ratio)
