"""Support vector machines that minimise the number of margin violations.

Besides the count-of-violations model trained by master/subproblem
decomposition, the package ships soft-margin, class-weighted and nu-SVM
baselines, an SMO dual solver, data loading, the N1 complexity measure and
an evaluation harness with grid search and Wilcoxon tests.
"""
from .complexity import ComplexityReport, fraction_borderline
from .data import Dataset, class_weights, load_csv, standardize, stratified_split
from .decomposition import BendersState, IterationRecord, extend_samples, initial_solution, run_decomposition
from .errors import BsvmError, DataError, InfeasibleNuError, InvalidInputError, SolverError
from .evaluation import BenchmarkReport, GridSearchResult, benchmark_run, grid_search
from .kernels import KernelSpec, eval_kernel, gram_matrix, kernel_matrix
from .metrics import MetricsReport, confusion_metrics
from .model import SvmModel, TrainConfig, decision_function, fit, load_model, predict, save_model
from .solver import DualSolution, SolverSettings, solve_c_svm_dual, solve_nu_svm_dual
from .stats import WilcoxonResult, wilcoxon_signed_rank

__version__ = "0.1.0"
__all__ = [
    "BenchmarkReport", "BendersState", "BsvmError", "ComplexityReport", "DataError", "Dataset",
    "DualSolution", "GridSearchResult", "InfeasibleNuError", "InvalidInputError",
    "IterationRecord", "KernelSpec", "MetricsReport", "SolverError", "SolverSettings", "SvmModel",
    "TrainConfig", "WilcoxonResult", "benchmark_run", "class_weights", "confusion_metrics",
    "decision_function", "eval_kernel", "extend_samples", "fit", "fraction_borderline",
    "gram_matrix", "grid_search", "initial_solution", "kernel_matrix", "load_csv", "load_model",
    "predict", "run_decomposition", "save_model", "solve_c_svm_dual", "solve_nu_svm_dual",
    "standardize", "stratified_split", "wilcoxon_signed_rank",
]
