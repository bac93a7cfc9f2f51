import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax
from sklearn import metrics

from src.config import config
from src.errors import InputError
from src.tabular_domain import Table
from src.tabular_encoder import encode_features

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassificationResult:
    accuracy: float
    f1: float


@dataclass
class LogisticModel:
    weights: np.ndarray    # (features, classes)
    bias: np.ndarray       # (classes,)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(x @ self.weights + self.bias, axis=1)


def fit_logistic(x: np.ndarray, y: np.ndarray, classes: int) -> LogisticModel:
    """Multinomial logistic regression: zero init, full-batch gradient descent, L2 on weights."""
    n, p = x.shape
    model = LogisticModel(np.zeros((p, classes)), np.zeros(classes))
    onehot = np.eye(classes)[y]
    for _ in range(config.logistic_iterations):
        residual = softmax(x @ model.weights + model.bias, axis=1) - onehot
        model.weights -= config.logistic_learning_rate * (x.T @ residual / n + config.logistic_l2 * model.weights)
        model.bias -= config.logistic_learning_rate * residual.mean(axis=0)
    return model


def score_predictions(truth: np.ndarray, predicted: np.ndarray, classes: int) -> ClassificationResult:
    """Accuracy plus class-1 F1 for binary targets, macro F1 otherwise."""
    accuracy = metrics.accuracy_score(truth, predicted)
    if classes == 2:
        f1 = metrics.f1_score(truth, predicted, pos_label=1, average="binary", zero_division=0)
    else:
        f1 = metrics.f1_score(truth, predicted, average="macro", zero_division=0)
    return ClassificationResult(float(accuracy), float(f1))


def _target_index(table: Table, target: int | str | None) -> int:
    if target is None:
        target = table.schema.target_index
    if target is None:
        raise InputError("no target column given and the schema declares none")
    index = table.schema.index_of(target) if isinstance(target, str) else int(target)
    if not table.schema.columns[index].is_categorical:
        raise InputError(f"target column '{table.schema.columns[index].name}' must be categorical")
    return index


def logistic_fit_eval(train: Table, test: Table, target: int | str | None = None) -> ClassificationResult:
    """Train on `train` (real or synthetic), score on held-out real `test`."""
    if train.schema != test.schema:
        raise InputError("train and test tables must share a schema")
    index = _target_index(train, target)
    classes = train.schema.columns[index].cardinality
    features = [i for i in range(train.d) if i != index]
    if not features:
        raise InputError("classification needs at least one feature column")

    x_train = encode_features(train.select_columns(features), drop_target=False)
    x_test = encode_features(test.select_columns(features), drop_target=False)
    y_train = train.column(index).astype(np.int64)
    y_test = test.column(index).astype(np.int64)

    model = fit_logistic(x_train, y_train, classes)
    result = score_predictions(y_test, model.predict(x_test), classes)
    logger.debug("Logistic regression on %d rows, %d features: accuracy %.4f, F1 %.4f",
                 train.n, x_train.shape[1], result.accuracy, result.f1)
    return result
