"""
Comparison methods: back-propagation network, weight initialization and PCA

This module provides the standard one-hidden-layer sigmoid BPN trained by
full-batch gradient descent on MSE, the uniform-range and SCAWI weight
initialization schemes, MinMax input scaling, and PCA by symmetric
eigendecomposition of the covariance matrix.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.preprocessing import MinMaxScaler

from dataset import Dataset
from utils import ConfigError, as_rng


logger = logging.getLogger(__name__)

INIT_KINDS = ("uniform-range", "scawi")
INPUT_SCALINGS = ("minmax", "none")
SCAWI_GAIN = 1.3


class DivergenceError(ArithmeticError):
    """Raised when BPN training produces a non-finite error"""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}: MSE is not finite")


@dataclass(frozen=True)
class InitScheme:
    """
    Weight initialization scheme: uniform draws in [lo, hi] or SCAWI
    """
    kind: str = "uniform-range"
    lo: float = -0.77
    hi: float = 0.77

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ConfigError(f"unknown init scheme '{self.kind}' (expected uniform-range or scawi)")
        if self.kind == "uniform-range" and not self.lo < self.hi:
            raise ConfigError(f"init range needs lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def parse(cls, text: str) -> "InitScheme":
        """
        Parse "scawi" or "uniform:LO,HI"

        Args:
            text (str): Scheme text from the command line

        Returns:
            InitScheme: Parsed scheme
        """
        text = text.strip().lower()
        if text == "scawi":
            return cls(kind="scawi")
        if text.startswith(("uniform:", "uniform-range:")):
            bounds = text.split(":", 1)[1].split(",")
            try:
                lo, hi = (float(b) for b in bounds)
            except ValueError:
                raise ConfigError(f"invalid uniform range '{text}' (expected uniform:LO,HI)")
            return cls(kind="uniform-range", lo=lo, hi=hi)
        raise ConfigError(f"unknown init scheme '{text}' (expected scawi or uniform:LO,HI)")

    def __str__(self) -> str:
        return "scawi" if self.kind == "scawi" else f"uniform:{self.lo!r},{self.hi!r}"


@dataclass(frozen=True)
class BpnConfig:
    """
    Topology and training settings for the back-propagation baseline
    """
    hidden_units: int = 10
    output_units: int = 1
    learning_rate: float = 0.5
    max_epochs: int = 10000
    target_mse: float = 1e-4
    init: InitScheme = field(default_factory=InitScheme)
    seed: int = 0
    input_scaling: str = "minmax"

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ConfigError(f"hidden_units must be at least 1, got {self.hidden_units}")
        if self.output_units not in (1, 2):
            raise ConfigError(f"output_units must be 1 or 2 for binary labels, got {self.output_units}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be at least 1, got {self.max_epochs}")
        if not self.target_mse > 0:
            raise ConfigError(f"target_mse must be positive, got {self.target_mse}")
        if self.input_scaling not in INPUT_SCALINGS:
            raise ConfigError(f"input_scaling must be minmax or none, got '{self.input_scaling}'")

    def replace(self, **changes) -> "BpnConfig":
        values = {**self.__dict__, **{k: v for k, v in changes.items() if v is not None}}
        return BpnConfig(**values)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["init"] = str(self.init)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BpnConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown BPN config keys: {', '.join(unknown)}")
        if isinstance(known.get("init"), str):
            known["init"] = InitScheme.parse(known["init"])
        try:
            return cls(**known)
        except TypeError as e:
            raise ConfigError(f"invalid BPN config: {e}")


@dataclass(frozen=True, eq=False)
class BpnModel:
    """
    Trained parameters of a one-hidden-layer sigmoid network

    w_hidden is hidden x inputs, w_out is outputs x hidden. Inputs are mapped
    by x * input_scale + input_offset before the forward pass.
    """
    w_hidden: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray
    epochs_run: int
    final_mse: float
    converged: bool = False
    input_scale: Optional[np.ndarray] = None
    input_offset: Optional[np.ndarray] = None
    mse_history: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def params(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.w_hidden, self.b_hidden, self.w_out, self.b_out

    @property
    def n_inputs(self) -> int:
        return self.w_hidden.shape[1]

    def scale_inputs(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.input_scale is None:
            return x
        return x * self.input_scale + self.input_offset

    def to_dict(self) -> Dict[str, Any]:
        def listed(array):
            return None if array is None else np.asarray(array).tolist()

        return {
            "w_hidden": listed(self.w_hidden),
            "b_hidden": listed(self.b_hidden),
            "w_out": listed(self.w_out),
            "b_out": listed(self.b_out),
            "epochs_run": self.epochs_run,
            "final_mse": self.final_mse,
            "converged": self.converged,
            "input_scale": listed(self.input_scale),
            "input_offset": listed(self.input_offset),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BpnModel":
        def array(value):
            return None if value is None else np.asarray(value, dtype=np.float64)

        return cls(
            w_hidden=array(data["w_hidden"]),
            b_hidden=array(data["b_hidden"]),
            w_out=array(data["w_out"]),
            b_out=array(data["b_out"]),
            epochs_run=int(data["epochs_run"]),
            final_mse=float(data["final_mse"]),
            converged=bool(data.get("converged", False)),
            input_scale=array(data.get("input_scale")),
            input_offset=array(data.get("input_offset")),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# ---------------------------------------------------------------------------
# Weight initialization
# ---------------------------------------------------------------------------

def init_uniform_range(shape: Union[int, Sequence[int]],
                       lo: float,
                       hi: float,
                       seed: Union[int, np.random.Generator, None]) -> np.ndarray:
    """
    Independent uniform draws in [lo, hi]

    Args:
        shape: Output shape
        lo (float): Lower bound
        hi (float): Upper bound, must exceed lo
        seed: Integer seed or Generator

    Returns:
        np.ndarray: Weights of the requested shape
    """
    if not lo < hi:
        raise ConfigError(f"init range needs lo < hi, got [{lo}, {hi}]")
    return as_rng(seed).uniform(lo, hi, size=shape)


def scawi_scale(n_inputs: int, mean_sq_input: float, layer: str, n_hidden: int) -> float:
    """Scale factor 1.3/sqrt(1 + N V^2) for the input layer, 1.3/sqrt(1 + 0.3 N_hidden) above it"""
    if layer == "input":
        if n_inputs < 1:
            raise ConfigError(f"SCAWI needs at least one input, got {n_inputs}")
        if mean_sq_input < 0:
            raise ConfigError(f"mean squared input must be non-negative, got {mean_sq_input}")
        return SCAWI_GAIN / math.sqrt(1.0 + n_inputs * mean_sq_input ** 2)
    if layer == "hidden":
        if n_hidden < 1:
            raise ConfigError(f"SCAWI needs at least one hidden unit, got {n_hidden}")
        return SCAWI_GAIN / math.sqrt(1.0 + 0.3 * n_hidden)
    raise ConfigError(f"SCAWI layer must be input or hidden, got '{layer}'")


def init_scawi(n_inputs: int,
               mean_sq_input: float,
               layer: str,
               n_hidden: int,
               seed: Union[int, np.random.Generator, None],
               n_outputs: int = 1,
               shape: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Statistically controlled activation weight initialization

    Each weight is scale * r with r uniform in [-1, 1]. Input-layer weights
    have shape (n_hidden, n_inputs) and hidden-layer weights
    (n_outputs, n_hidden) unless shape is given (used for biases).

    Args:
        n_inputs (int): Number of network inputs
        mean_sq_input (float): Mean squared value of the inputs (V)
        layer (str): "input" or "hidden"
        n_hidden (int): Number of hidden units
        seed: Integer seed or Generator
        n_outputs (int): Number of output units
        shape: Explicit output shape

    Returns:
        np.ndarray: Initialized weights
    """
    scale = scawi_scale(n_inputs, mean_sq_input, layer, n_hidden)
    if shape is None:
        shape = (n_hidden, n_inputs) if layer == "input" else (n_outputs, n_hidden)
    return scale * as_rng(seed).uniform(-1.0, 1.0, size=shape)


def _initial_params(cfg: BpnConfig, n_inputs: int, mean_sq_input: float,
                    rng: np.random.Generator) -> Tuple[np.ndarray, ...]:
    h, o = cfg.hidden_units, cfg.output_units
    if cfg.init.kind == "scawi":
        w_hidden = init_scawi(n_inputs, mean_sq_input, "input", h, rng)
        b_hidden = init_scawi(n_inputs, mean_sq_input, "input", h, rng, shape=(h,))
        w_out = init_scawi(n_inputs, mean_sq_input, "hidden", h, rng, n_outputs=o)
        b_out = init_scawi(n_inputs, mean_sq_input, "hidden", h, rng, shape=(o,))
    else:
        lo, hi = cfg.init.lo, cfg.init.hi
        w_hidden = init_uniform_range((h, n_inputs), lo, hi, rng)
        b_hidden = init_uniform_range((h,), lo, hi, rng)
        w_out = init_uniform_range((o, h), lo, hi, rng)
        b_out = init_uniform_range((o,), lo, hi, rng)
    return w_hidden, b_hidden, w_out, b_out


# ---------------------------------------------------------------------------
# Back-propagation network
# ---------------------------------------------------------------------------

def sigmoid(x: np.ndarray) -> np.ndarray:
    # Clipped so exp() stays finite
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


def _forward(params, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    w_hidden, b_hidden, w_out, b_out = params
    hidden = sigmoid(x @ w_hidden.T + b_hidden)
    output = sigmoid(hidden @ w_out.T + b_out)
    return hidden, output


def targets_for(labels: np.ndarray, output_units: int) -> np.ndarray:
    """Column of labels for one output unit, one-hot rows for two"""
    labels = np.asarray(labels, dtype=np.float64)
    if output_units == 1:
        return labels[:, np.newaxis]
    return np.column_stack([1.0 - labels, labels])


def bpn_loss_and_gradients(params, x: np.ndarray, t: np.ndarray) -> Tuple[float, Tuple[np.ndarray, ...]]:
    """
    Mean squared error over all instances and outputs, with its gradients

    Args:
        params: (w_hidden, b_hidden, w_out, b_out)
        x (np.ndarray): n x inputs matrix
        t (np.ndarray): n x outputs targets

    Returns:
        (mse, gradients) with gradients in the same order as params
    """
    _, _, w_out, _ = params
    hidden, output = _forward(params, x)
    error = output - t
    mse = float(np.mean(error ** 2))

    d_output = 2.0 * error / error.size
    d_out_pre = d_output * output * (1.0 - output)
    g_w_out = d_out_pre.T @ hidden
    g_b_out = d_out_pre.sum(axis=0)

    d_hidden_pre = (d_out_pre @ w_out) * hidden * (1.0 - hidden)
    g_w_hidden = d_hidden_pre.T @ x
    g_b_hidden = d_hidden_pre.sum(axis=0)
    return mse, (g_w_hidden, g_b_hidden, g_w_out, g_b_out)


def bpn_train(train: Dataset, cfg: Optional[BpnConfig] = None) -> BpnModel:
    """
    Train the one-hidden-layer sigmoid network by full-batch gradient descent

    Stops when the MSE reaches cfg.target_mse or after cfg.max_epochs updates,
    whichever comes first.

    Args:
        train (Dataset): Training set with binary labels
        cfg (BpnConfig): Topology and training settings

    Returns:
        BpnModel: Trained network with epochs_run and final_mse
    """
    cfg = cfg or BpnConfig()
    train.require_both_classes()

    x = train.features
    scale = offset = None
    if cfg.input_scaling == "minmax":
        scaler = MinMaxScaler().fit(x)
        scale, offset = scaler.scale_.copy(), scaler.min_.copy()
        x = x * scale + offset
    t = targets_for(train.labels, cfg.output_units)

    rng = as_rng(cfg.seed)
    mean_sq_input = float(np.mean(x ** 2))
    params = list(_initial_params(cfg, x.shape[1], mean_sq_input, rng))

    history = []
    epochs_run = 0
    while epochs_run < cfg.max_epochs:
        mse, grads = bpn_loss_and_gradients(params, x, t)
        if not math.isfinite(mse) or not all(np.all(np.isfinite(g)) for g in grads):
            raise DivergenceError(epochs_run + 1)
        history.append(mse)
        if mse <= cfg.target_mse:
            break
        for p, g in zip(params, grads):
            p -= cfg.learning_rate * g
        epochs_run += 1

    _, output = _forward(params, x)
    final_mse = float(np.mean((output - t) ** 2))
    if not math.isfinite(final_mse):
        raise DivergenceError(epochs_run)
    converged = final_mse <= cfg.target_mse
    if not converged:
        logger.warning(f"BPN on {train.name} stopped at the {cfg.max_epochs}-epoch cap with MSE {final_mse:.6g}")
    else:
        logger.info(f"BPN on {train.name} converged in {epochs_run} epochs (MSE {final_mse:.6g})")

    return BpnModel(
        w_hidden=params[0],
        b_hidden=params[1],
        w_out=params[2],
        b_out=params[3],
        epochs_run=epochs_run,
        final_mse=final_mse,
        converged=converged,
        input_scale=scale,
        input_offset=offset,
        mse_history=tuple(history),
    )


def bpn_outputs(model: BpnModel, rows) -> np.ndarray:
    """Raw sigmoid outputs for rows of unscaled inputs"""
    x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if x.shape[1] != model.n_inputs:
        raise ConfigError(f"input has {x.shape[1]} attributes, network expects {model.n_inputs}")
    _, output = _forward(model.params, model.scale_inputs(x))
    return output


def bpn_predict_many(model: BpnModel, rows) -> np.ndarray:
    """Class labels for every row; output >= 0.5 means class 1"""
    output = bpn_outputs(model, rows)
    if output.shape[1] == 1:
        return (output[:, 0] >= 0.5).astype(np.int64)
    return (output[:, 1] >= output[:, 0]).astype(np.int64)


def bpn_predict(model: BpnModel, instance) -> int:
    """
    Class label for one instance

    Args:
        model (BpnModel): Trained network
        instance: Row of raw attribute values

    Returns:
        int: 1 when the output is at least 0.5, else 0
    """
    return int(bpn_predict_many(model, instance)[0])


# ---------------------------------------------------------------------------
# Principal component analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PcaTransform:
    """
    Column means, top-d eigenvectors (rows of components) and all eigenvalues in descending order
    """
    means: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "means": self.means.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PcaTransform":
        return cls(
            means=np.asarray(data["means"], dtype=np.float64),
            components=np.atleast_2d(np.asarray(data["components"], dtype=np.float64)),
            eigenvalues=np.asarray(data["eigenvalues"], dtype=np.float64),
        )


def pca_fit(x: np.ndarray, d: int = 10) -> PcaTransform:
    """
    Fit PCA by eigendecomposition of the sample covariance matrix

    Eigenvectors are sign-normalized so their largest-magnitude entry is
    positive, which makes the transform deterministic.

    Args:
        x (np.ndarray): n x m data matrix, n >= 2
        d (int): Number of components to keep, 1 <= d <= m

    Returns:
        PcaTransform: Fitted projection
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigError(f"PCA expects a 2-D matrix, got shape {x.shape}")
    n, m = x.shape
    if n < 2:
        raise ConfigError(f"PCA needs at least 2 rows, got {n}")
    if not 1 <= d <= m:
        raise ConfigError(f"PCA dimension {d} out of range [1, {m}]")

    means = x.mean(axis=0)
    covariance = np.atleast_2d(np.cov(x - means, rowvar=False))
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)

    order = np.argsort(eigenvalues, kind="stable")[::-1]
    eigenvalues = eigenvalues[order]
    components = eigenvectors[:, order].T

    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(m), pivots])
    components = components * np.where(signs == 0, 1.0, signs)[:, np.newaxis]

    return PcaTransform(means=means, components=components[:d], eigenvalues=eigenvalues)


def pca_transform(t: PcaTransform, x: np.ndarray) -> np.ndarray:
    """Project centred rows onto the stored eigenvectors (n x d result)"""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != t.means.size:
        raise ConfigError(f"input has {x.shape[1]} columns, PCA was fitted on {t.means.size}")
    return (x - t.means) @ t.components.T


def pca_inverse_transform(t: PcaTransform, y: np.ndarray) -> np.ndarray:
    """Map projected rows back to the original space"""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if y.shape[1] != t.n_components:
        raise ConfigError(f"input has {y.shape[1]} columns, PCA keeps {t.n_components}")
    return y @ t.components + t.means
