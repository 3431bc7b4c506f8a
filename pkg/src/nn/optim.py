"""Adam over name-keyed parameter dicts."""

from typing import Dict, Optional

import numpy as np

from ..util.schema import TrainConfig


class Adam:
    """Adam with bias-corrected moments; updates the parameter arrays in place."""

    def __init__(self, params: Dict[str, np.ndarray], lr: float = 5e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    @classmethod
    def from_config(cls, params: Dict[str, np.ndarray], cfg: TrainConfig) -> "Adam":
        return cls(params, lr=cfg.learning_rate, beta1=cfg.adam_beta1, beta2=cfg.adam_beta2, eps=cfg.adam_eps)

    def step(self, grads: Dict[str, np.ndarray], lr: Optional[float] = None) -> None:
        lr = self.lr if lr is None else lr
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        # Fixed key order keeps updates reproducible.
        for name in sorted(self.params):
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            self.params[name] -= lr * m_hat / (np.sqrt(v_hat) + self.eps)
