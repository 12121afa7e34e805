#!/usr/bin/env python3
"""
Red Feed-Forward con Retropropagación Exacta
============================================
Red de salida escalar con capas ocultas ReLU, gradiente analítico,
optimizador Adam (o SGD) con estado desacoplado y decaimiento L2.

Convenciones:
- Pesos W de forma (salida, entrada), sesgos b de forma (salida,).
- Subgradiente de ReLU en 0 igual a 0.
- El decaimiento L2 λ·w se suma a la dirección antes de actualizar momentos.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..config.settings import NetworkConfig
from ..utils.errors import DataError, NumericError


def _como_vector(s) -> np.ndarray:
    # Acepta AugmentedState o un vector directamente
    return np.asarray(getattr(s, 's_hat', s))


class Network:
    """Red f_w: capas afines con ReLU entre ellas y salida escalar"""

    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise DataError("La red necesita al menos una capa con pesos y sesgos")
        self.weights = list(weights)
        self.biases = list(biases)
        if self.weights[-1].shape[0] != 1:
            raise DataError("La dimensión de salida debe ser 1")

    @property
    def dims(self) -> List[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self) -> List[np.ndarray]:
        """Parámetros en orden [W0, b0, W1, b1, ...]"""
        salida = []
        for w, b in zip(self.weights, self.biases):
            salida.extend([w, b])
        return salida

    def copy(self) -> 'Network':
        return Network([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def all_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.parameters())


@dataclass
class Gradient:
    """Gradiente (o dirección) con las formas de los parámetros"""
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def arrays(self) -> List[np.ndarray]:
        salida = []
        for w, b in zip(self.weights, self.biases):
            salida.extend([w, b])
        return salida

    def scale(self, factor: float) -> 'Gradient':
        return Gradient([w * factor for w in self.weights], [b * factor for b in self.biases])

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())


@dataclass
class OptimizerHyper:
    """Hiperparámetros del optimizador"""
    kind: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon: float = 1e-4
    weight_decay: float = 0.0


@dataclass
class OptimizerState:
    """Acumuladores de momentos (mismo orden que Network.parameters) y contador de pasos"""
    first_moment: List[np.ndarray]
    second_moment: List[np.ndarray]
    step_count: int = 0
    hyper: OptimizerHyper = field(default_factory=OptimizerHyper)

    def copy(self) -> 'OptimizerState':
        return OptimizerState([m.copy() for m in self.first_moment],
                              [v.copy() for v in self.second_moment],
                              self.step_count,
                              OptimizerHyper(**vars(self.hyper)))


def init_network(dims: Sequence[int], seed: int, dtype=np.float64) -> Network:
    """
    Inicialización uniforme escalada por fan-in: U(-1/√fan_in, 1/√fan_in).

    Args:
        dims: [entrada, ocultas..., 1]
        seed: Semilla
        dtype: Precisión de los parámetros

    Returns:
        Red determinista dada la semilla
    """
    dims = list(dims)
    if len(dims) < 2:
        raise DataError(f"Dimensiones inválidas: {dims}")
    if dims[-1] != 1:
        raise DataError(f"La última dimensión debe ser 1: {dims}")
    if any(d < 1 for d in dims):
        raise DataError(f"Todas las dimensiones deben ser positivas: {dims}")

    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limite = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-limite, limite, size=(fan_out, fan_in)).astype(dtype))
        biases.append(rng.uniform(-limite, limite, size=fan_out).astype(dtype))
    return Network(weights, biases)


def init_optimizer(net: Network, hyper: Optional[OptimizerHyper] = None) -> OptimizerState:
    """Estado del optimizador en cero (momentos nulos, 0 pasos)"""
    hyper = hyper or OptimizerHyper()
    if hyper.kind not in ("adam", "sgd"):
        raise DataError(f"Optimizador desconocido: {hyper.kind}")
    return OptimizerState([np.zeros_like(p) for p in net.parameters()],
                          [np.zeros_like(p) for p in net.parameters()],
                          0, hyper)


def _verificar_entrada(net: Network, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=net.dtype)
    if X.shape[-1] != net.dims[0]:
        raise DataError(f"Ancho de entrada {X.shape[-1]} distinto de {net.dims[0]}")
    return X


def _forward_cache(net: Network, X: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
    """Propagación por lotes guardando entradas de cada capa y pre-activaciones"""
    entradas, pre = [], []
    a = X
    ultima = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        entradas.append(a)
        z = a @ w.T + b
        pre.append(z)
        a = z if i == ultima else np.maximum(z, 0)
    return a[:, 0], entradas, pre


def forward_batch(net: Network, X: np.ndarray) -> np.ndarray:
    """Predicciones para un lote N x entrada"""
    X = _verificar_entrada(net, np.atleast_2d(X))
    return _forward_cache(net, X)[0]


def forward(net: Network, s) -> float:
    """Predicción escalar f_w(ŝ); función pura de (net, s)"""
    return float(forward_batch(net, _como_vector(s)[None, :])[0])


def _backward(net: Network, coeffs: np.ndarray, entradas: List[np.ndarray],
              pre: List[np.ndarray]) -> Gradient:
    delta = coeffs[:, None].astype(net.dtype)
    grad_w: List[np.ndarray] = [None] * len(net.weights)
    grad_b: List[np.ndarray] = [None] * len(net.weights)
    for i in range(len(net.weights) - 1, -1, -1):
        grad_w[i] = delta.T @ entradas[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i]) * (pre[i - 1] > 0)
    return Gradient(grad_w, grad_b)


def weighted_gradient(net: Network, X: np.ndarray, coeffs: np.ndarray) -> Gradient:
    """
    Σ_i coeffs_i ∇f_w(x_i) en una sola pasada con orden de reducción fijo.

    Args:
        net: Red
        X: Lote N x entrada
        coeffs: Coeficientes por muestra (N,)

    Returns:
        Gradiente combinado
    """
    X = _verificar_entrada(net, np.atleast_2d(X))
    _, entradas, pre = _forward_cache(net, X)
    return _backward(net, np.asarray(coeffs), entradas, pre)


def batch_value_gradient(net: Network, X: np.ndarray,
                         coeffs_fn: Callable[[np.ndarray], np.ndarray]) -> Tuple[np.ndarray, Gradient]:
    """
    Valores del lote y Σ_i a_i ∇f(x_i) con a = coeffs_fn(valores), en una sola propagación.

    Args:
        net: Red
        X: Lote N x entrada
        coeffs_fn: Coeficientes por muestra a partir de las predicciones del lote

    Returns:
        (predicciones, gradiente combinado)
    """
    X = _verificar_entrada(net, np.atleast_2d(X))
    valores, entradas, pre = _forward_cache(net, X)
    return valores, _backward(net, np.asarray(coeffs_fn(valores)), entradas, pre)


def value_and_gradient(net: Network, s) -> Tuple[float, Gradient]:
    """f_w(ŝ) y ∇f_w(ŝ) con una sola propagación"""
    X = _verificar_entrada(net, _como_vector(s)[None, :])
    salida, entradas, pre = _forward_cache(net, X)
    return float(salida[0]), _backward(net, np.ones(1), entradas, pre)


def backward_grad(net: Network, s) -> Gradient:
    """Gradiente exacto de la salida escalar respecto de cada parámetro"""
    return value_and_gradient(net, s)[1]


def adam_step(net: Network, opt: OptimizerState, direction: Gradient, lr: float,
              check_finite: bool = True) -> Tuple[Network, OptimizerState]:
    """
    Aplicar un paso del optimizador sobre ``direction`` (actualiza en sitio).

    Adam: g = direction + λw; m, v con corrección de sesgo;
    w -= lr · m̂ / (√v̂ + ε). Con ``hyper.kind == "sgd"``: w -= lr · g.

    Args:
        net: Red a actualizar
        opt: Estado del optimizador
        direction: Dirección de descenso (p. ej. -δ∇f)
        lr: Tamaño de paso (>= 0)
        check_finite: Verificar que dirección y parámetros resultantes sean finitos

    Returns:
        (red, estado del optimizador) actualizados
    """
    if lr < 0:
        raise NumericError(f"Tamaño de paso negativo: {lr}")
    parametros = net.parameters()
    direcciones = direction.arrays()
    if len(direcciones) != len(parametros) or any(
            d.shape != p.shape for d, p in zip(direcciones, parametros)):
        raise DataError("La dirección no tiene las formas de la red")
    if check_finite and not direction.all_finite():
        raise NumericError("Dirección de actualización no finita")

    hyper = opt.hyper
    opt.step_count += 1
    lr_t = net.dtype.type(lr)

    if hyper.kind == "sgd":
        for p, d in zip(parametros, direcciones):
            g = d + hyper.weight_decay * p if hyper.weight_decay else d
            p -= lr_t * g
    else:
        b1, b2 = hyper.beta1, hyper.beta2
        correccion1 = 1.0 - b1 ** opt.step_count
        correccion2 = 1.0 - b2 ** opt.step_count
        for p, d, m, v in zip(parametros, direcciones, opt.first_moment, opt.second_moment):
            g = d + hyper.weight_decay * p if hyper.weight_decay else d
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= lr_t * (m / correccion1) / (np.sqrt(v / correccion2) + hyper.epsilon)

    if check_finite and not net.all_finite():
        raise NumericError(f"Parámetros no finitos tras el paso {opt.step_count}")
    return net, opt


def gradient_step(net: Network, direction: Gradient, lr: float) -> Network:
    """Paso de gradiente simple w -= lr · direction, sin tocar el estado del optimizador"""
    if lr < 0:
        raise NumericError(f"Tamaño de paso negativo: {lr}")
    parametros = net.parameters()
    direcciones = direction.arrays()
    if len(direcciones) != len(parametros) or any(
            d.shape != p.shape for d, p in zip(direcciones, parametros)):
        raise DataError("La dirección no tiene las formas de la red")
    if not direction.all_finite():
        raise NumericError("Dirección de actualización no finita")
    lr_t = net.dtype.type(lr)
    for p, d in zip(parametros, direcciones):
        p -= lr_t * d
    if not net.all_finite():
        raise NumericError("Parámetros no finitos tras el paso de gradiente")
    return net


def hyper_from_config(cfg: NetworkConfig) -> OptimizerHyper:
    """Hiperparámetros del optimizador desde la sección ``network``"""
    return OptimizerHyper(cfg.optimizer, cfg.beta1, cfg.beta2, cfg.epsilon, cfg.weight_decay)


def build_network(width: int, cfg: NetworkConfig, seed: int) -> Tuple[Network, OptimizerState]:
    """
    Red y optimizador nuevos para un estado de ancho ``width``

    Args:
        width: Ancho del estado aumentado
        cfg: Arquitectura, optimizador y precisión
        seed: Semilla de inicialización

    Returns:
        (Network, OptimizerState) en cero pasos
    """
    dims = [width, *cfg.hidden_sizes, 1]
    net = init_network(dims, seed, dtype=np.dtype(cfg.precision))
    return net, init_optimizer(net, hyper_from_config(cfg))
