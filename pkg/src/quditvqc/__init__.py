"""Single-qudit variational circuit classifiers with quantum-autoencoder embeddings."""
from .algebra import (
    GeneratorBasis,
    assemble_hermitian,
    build_generator_basis,
    exp_derivative,
    exp_minus_i,
    rotation_gate,
)
from .data import LabeledDataset, Standardizer, split_dataset, synthesize_dataset
from .metrics import compute_metrics, confusion, predict_class
from .models import (
    BatchedQae,
    DenseNn,
    Qae,
    QaeQubitClassifier,
    QaeQuditClassifier,
    QubitVqc,
    QuditVqc,
)
from .training import TrainConfig, TrainReport, train_dense_nn, train_qae, train_vqc

__version__ = "0.1.0"

__all__ = [
    "BatchedQae",
    "DenseNn",
    "GeneratorBasis",
    "LabeledDataset",
    "Qae",
    "QaeQubitClassifier",
    "QaeQuditClassifier",
    "QubitVqc",
    "QuditVqc",
    "Standardizer",
    "TrainConfig",
    "TrainReport",
    "assemble_hermitian",
    "build_generator_basis",
    "compute_metrics",
    "confusion",
    "exp_derivative",
    "exp_minus_i",
    "predict_class",
    "rotation_gate",
    "split_dataset",
    "synthesize_dataset",
    "train_dense_nn",
    "train_qae",
    "train_vqc",
]
