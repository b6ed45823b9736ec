"""
Method registry shared by the evaluation harness and the command line

A method tag ("pwla-smffnn", "pwla-smffnn-reduced:top-k:11", "sbpn",
"pca-bpn:10", "scawi-bpn") is parsed into a MethodSpec, and fit_method turns
a spec plus a training set into a FittedMethod that can label new rows and
be saved as JSON.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np

import pwla
import smffnn
from baselines import (
    BpnConfig,
    BpnModel,
    InitScheme,
    PcaTransform,
    bpn_predict_many,
    bpn_train,
    pca_fit,
    pca_transform,
)
from dataset import Dataset
from pwla import ReductionPolicy
from smffnn import SmffnnModel
from utils import ConfigError


logger = logging.getLogger(__name__)

METHOD_TAGS = ("pwla-smffnn", "pwla-smffnn-reduced", "sbpn", "pca-bpn", "scawi-bpn")
DEFAULT_PCA_DIMS = 10


@dataclass(frozen=True)
class MethodSpec:
    """
    A method tag plus the settings that configure it

    policy, rule and axis apply to the PWLA methods; pca_dims to pca-bpn;
    bpn to the three back-propagation methods.
    """
    tag: str
    policy: ReductionPolicy = field(default_factory=ReductionPolicy)
    rule: str = "nearest"
    axis: str = "row"
    pca_dims: int = DEFAULT_PCA_DIMS
    bpn: BpnConfig = field(default_factory=BpnConfig)

    def __post_init__(self):
        if self.tag not in METHOD_TAGS:
            raise ConfigError(f"unknown method '{self.tag}' (expected one of {', '.join(METHOD_TAGS)})")
        if self.rule not in smffnn.PREDICTION_RULES:
            raise ConfigError(f"unknown prediction rule '{self.rule}' (expected nearest or interval)")
        if self.axis not in pwla.AXES:
            raise ConfigError(f"unknown standardization axis '{self.axis}' (expected row or column)")
        if self.pca_dims < 1:
            raise ConfigError(f"PCA dimension must be at least 1, got {self.pca_dims}")

    @property
    def is_pwla(self) -> bool:
        return self.tag.startswith("pwla-")

    @property
    def name(self) -> str:
        """Display name used in reports"""
        if self.tag == "pwla-smffnn-reduced":
            return f"{self.tag}:{self.policy}"
        if self.tag == "pca-bpn":
            return f"{self.tag}:{self.pca_dims}"
        return self.tag

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tag": self.tag,
            "policy": str(self.policy),
            "rule": self.rule,
            "axis": self.axis,
            "pca_dims": self.pca_dims,
            "bpn": self.bpn.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MethodSpec":
        return cls(
            tag=data["tag"],
            policy=ReductionPolicy.parse(data.get("policy", "keep-all")),
            rule=data.get("rule", "nearest"),
            axis=data.get("axis", "row"),
            pca_dims=int(data.get("pca_dims", DEFAULT_PCA_DIMS)),
            bpn=BpnConfig.from_dict(data.get("bpn", {})),
        )


def parse_method(text: str,
                 policy: Optional[ReductionPolicy] = None,
                 rule: str = "nearest",
                 axis: str = "row",
                 pca_dims: Optional[int] = None,
                 bpn: Optional[BpnConfig] = None) -> MethodSpec:
    """
    Parse a method tag with an optional suffix

    A suffix on the tag ("pwla-smffnn-reduced:top-k:11", "pca-bpn:10")
    takes precedence over the keyword settings. pwla-smffnn-reduced without
    a reducing policy uses above-mean; scawi-bpn always initializes with
    SCAWI.

    Args:
        text (str): Method tag
        policy (ReductionPolicy): Reduction policy from the command line
        rule (str): SMFFNN prediction rule
        axis (str): PWLA standardization axis
        pca_dims (int): PCA dimension count
        bpn (BpnConfig): Back-propagation settings

    Returns:
        MethodSpec: Parsed method
    """
    text = text.strip().lower()
    tag, _, suffix = text.partition(":")
    if tag not in METHOD_TAGS:
        raise ConfigError(f"unknown method '{text}' (expected one of {', '.join(METHOD_TAGS)})")

    policy = policy or ReductionPolicy()
    bpn = bpn or BpnConfig()
    dims = pca_dims or DEFAULT_PCA_DIMS

    if suffix and tag not in ("pwla-smffnn-reduced", "pca-bpn"):
        raise ConfigError(f"method '{tag}' takes no ':' suffix, got '{text}'")
    if tag == "pwla-smffnn-reduced":
        if suffix:
            policy = ReductionPolicy.parse(suffix)
        elif policy.kind == "keep-all":
            policy = ReductionPolicy(kind="above-mean")
    elif tag == "pca-bpn" and suffix:
        try:
            dims = int(suffix)
        except ValueError:
            raise ConfigError(f"invalid PCA dimension in '{text}'")
    elif tag == "scawi-bpn":
        bpn = bpn.replace(init=InitScheme(kind="scawi"))

    return MethodSpec(tag=tag, policy=policy, rule=rule, axis=axis, pca_dims=dims, bpn=bpn)


def parse_methods(text: str, **settings) -> List[MethodSpec]:
    """Comma-separated method tags, each parsed with the same settings"""
    tags = [t for t in (part.strip() for part in text.split(",")) if t]
    if not tags:
        raise ConfigError("no methods given")
    return [parse_method(t, **settings) for t in tags]


@dataclass(frozen=True, eq=False)
class FittedMethod:
    """
    A trained classifier together with the method tag that produced it
    """
    spec: MethodSpec
    model: Union[SmffnnModel, BpnModel]
    n_attributes: int
    pca: Optional[PcaTransform] = None

    @property
    def epochs(self) -> int:
        if isinstance(self.model, SmffnnModel):
            return self.model.epochs
        return self.model.epochs_run

    @property
    def kept_count(self) -> int:
        if isinstance(self.model, SmffnnModel):
            return len(self.model.pwla.kept_indices)
        return self.pca.n_components if self.pca is not None else self.n_attributes

    def predict_many(self, rows) -> np.ndarray:
        """Labels for every row of raw attribute values"""
        x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if x.shape[1] != self.n_attributes:
            raise ConfigError(f"input has {x.shape[1]} attributes, {self.spec.name} was fitted on {self.n_attributes}")
        if isinstance(self.model, SmffnnModel):
            return smffnn.predict_many(self.model, x)
        if self.pca is not None:
            x = pca_transform(self.pca, x)
        return bpn_predict_many(self.model, x)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "method": self.spec.to_dict(),
            "n_attributes": self.n_attributes,
            "model": self.model.to_dict(),
        }
        if self.pca is not None:
            data["pca"] = self.pca.to_dict()
        return data


def load_fitted(data: Dict[str, Any]) -> FittedMethod:
    """
    Rebuild a FittedMethod from its to_dict() form

    Args:
        data (dict): Parsed model file

    Returns:
        FittedMethod: Ready-to-use classifier
    """
    try:
        spec = MethodSpec.from_dict(data["method"])
        if spec.is_pwla:
            model = SmffnnModel.from_dict(data["model"]).with_rule(spec.rule)
        else:
            model = BpnModel.from_dict(data["model"])
        pca = PcaTransform.from_dict(data["pca"]) if "pca" in data else None
        return FittedMethod(spec=spec, model=model, n_attributes=int(data["n_attributes"]), pca=pca)
    except (KeyError, TypeError, IndexError, ValueError) as e:
        raise ConfigError(f"invalid model file: missing or malformed field {e}")


def fit_method(spec: MethodSpec,
               train: Dataset,
               on_visit: Optional[Callable[[int], None]] = None) -> FittedMethod:
    """
    Train the method described by spec on a training set

    Args:
        spec (MethodSpec): Method and settings
        train (Dataset): Training instances (both classes present)
        on_visit: Per-instance callback for the SMFFNN training pass

    Returns:
        FittedMethod: Trained classifier
    """
    train.require_both_classes()

    if spec.is_pwla:
        model = pwla.fit(train, policy=spec.policy, axis=spec.axis)
        fitted = smffnn.fit_thresholds(model, train, rule=spec.rule, on_visit=on_visit)
        return FittedMethod(spec=spec, model=fitted, n_attributes=train.n_attributes)

    if spec.tag == "pca-bpn":
        dims = spec.pca_dims
        if dims > train.n_attributes:
            logger.warning(f"{train.name}: PCA dimension {dims} exceeds {train.n_attributes} attributes, using {train.n_attributes}")
            dims = train.n_attributes
        transform = pca_fit(train.features, dims)
        projected = train.with_features(pca_transform(transform, train.features), name=f"{train.name}/pca{dims}")
        network = bpn_train(projected, spec.bpn)
        return FittedMethod(spec=spec, model=network, n_attributes=train.n_attributes, pca=transform)

    network = bpn_train(train, spec.bpn)
    return FittedMethod(spec=spec, model=network, n_attributes=train.n_attributes)
