from .forest import RandomForest, gini, predict_forest, train_forest
from .functions import logistic, rbf_kernel
from .knn import KNNClassifier, predict_knn, train_knn
from .logreg import LogisticRegressionGD, loss_and_gradient, train_logreg
from .svm import SMOClassifier, kkt_violations, train_svm

KINDS = {
    "knn": KNNClassifier,
    "logreg": LogisticRegressionGD,
    "forest": RandomForest,
    "svm": SMOClassifier,
}

__all__ = [
    "KINDS", "KNNClassifier", "LogisticRegressionGD", "RandomForest", "SMOClassifier", "gini",
    "kkt_violations", "logistic", "loss_and_gradient", "predict_forest", "predict_knn",
    "rbf_kernel", "train_forest", "train_knn", "train_logreg", "train_svm",
]
