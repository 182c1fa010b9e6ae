import json
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from gbridge.core import make_uniform_grid
from gbridge.errors import BridgeError, ConfigError
from gbridge.insider import MarketSpec
from gbridge.models import (MeanFunction, brownian_motion, fractional_brownian_motion,
                            gaussian_martingale, generic_model, tabulated_bracket,
                            tabulated_covariance)
from gbridge.wiener import ConditioningSet, GridFunction, preset_function

LOGGER = logging.getLogger(__name__)

MODEL_KINDS = ('bm', 'martingale', 'fbm', 'generic-grid')


@dataclass(frozen=True)
class ModelConfig:
    """模型配置: 协方差模型、可选均值、以及表格模型自带的网格大小"""

    model: object
    mean_values: Optional[list] = None
    native_n: Optional[int] = None

    def mean(self, grid):
        if self.mean_values is None:
            return MeanFunction.zero(grid)
        return MeanFunction.from_uniform_values(self.mean_values, grid)

    def grid_n(self, requested, default=None):
        if self.native_n is not None and requested is not None and requested != self.native_n:
            raise ConfigError('grid_n', f"generic-grid covariance is tabulated on {self.native_n} "
                                        f"segments, got --grid-n {requested}")
        if self.native_n is not None:
            return self.native_n
        return default if requested is None else requested


def clean_numeric_value(value, field):
    """
    清理数值数据: 去掉千位分隔符, 拒绝空值和非有限值
    """
    if value is None or isinstance(value, bool) or (isinstance(value, str) and not value.strip()):
        raise ConfigError(field, "missing numeric value")
    if isinstance(value, str):
        value = value.strip().replace(',', '').replace('，', '')
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigError(field, f"not a number: {value!r}")
    if not math.isfinite(number):
        raise ConfigError(field, f"not finite: {value!r}")
    return number


def clean_numeric_list(values, field):
    if not isinstance(values, list) or not values:
        raise ConfigError(field, "expected a non-empty list of numbers")
    return [clean_numeric_value(v, f"{field}[{i}]") for i, v in enumerate(values)]


def read_json(path, field='file'):
    """读取 JSON 文件; 文件不可读或格式错误都按配置错误处理"""
    try:
        with open(path, encoding='utf-8') as handle:
            return json.load(handle)
    except OSError as e:
        raise ConfigError(field, f"cannot read {path}: {e.strerror or e}")
    except json.JSONDecodeError as e:
        raise ConfigError(field, f"{path} is not valid JSON: {e.msg} (line {e.lineno})")


def _as_document(source, field):
    if isinstance(source, dict):
        return source
    if isinstance(source, str):
        doc = read_json(source, field)
        if not isinstance(doc, dict):
            raise ConfigError(field, f"{source} must hold a JSON object")
        return doc
    raise ConfigError(field, "expected an object or a file path")


def _require(doc, key, field):
    if key not in doc:
        raise ConfigError(f"{field}.{key}", "missing")
    return doc[key]


def load_model(source, field='model'):
    doc = _as_document(source, field)
    kind = _require(doc, 'kind', field)
    if kind not in MODEL_KINDS:
        raise ConfigError(f"{field}.kind", f"expected one of {MODEL_KINDS}, got {kind!r}")
    T = clean_numeric_value(doc.get('T', 1.0), f"{field}.T")
    if T <= 0:
        raise ConfigError(f"{field}.T", "must be positive")
    mean_values = None
    if 'mean_values' in doc:
        mean_values = clean_numeric_list(doc['mean_values'], f"{field}.mean_values")
        if len(mean_values) < 2:
            raise ConfigError(f"{field}.mean_values", "needs at least two values")
    native_n = None
    try:
        if kind == 'bm':
            model = brownian_motion(T)
        elif kind == 'martingale':
            values = clean_numeric_list(_require(doc, 'bracket_values', field),
                                        f"{field}.bracket_values")
            if len(values) < 2:
                raise ConfigError(f"{field}.bracket_values", "needs at least two values")
            model = gaussian_martingale(tabulated_bracket(values, T), T)
        elif kind == 'fbm':
            hurst = clean_numeric_value(_require(doc, 'hurst', field), f"{field}.hurst")
            model = fractional_brownian_motion(hurst, T)
        else:
            matrix = _require(doc, 'cov_matrix', field)
            if not isinstance(matrix, list) or not matrix:
                raise ConfigError(f"{field}.cov_matrix", "expected a square list of rows")
            rows = [clean_numeric_list(row, f"{field}.cov_matrix[{i}]") for i, row in enumerate(matrix)]
            if any(len(row) != len(rows) for row in rows) or len(rows) < 2:
                raise ConfigError(f"{field}.cov_matrix", "must be square with at least two nodes")
            native_n = len(rows) - 1
            model = generic_model(tabulated_covariance(np.array(rows), T), T, name='generic-grid')
    except ConfigError:
        raise
    except BridgeError as e:
        raise ConfigError(field, str(e))
    LOGGER.info("loaded %s model with T=%g", kind, T)
    return ModelConfig(model, mean_values, native_n)


def _function_entry(entry, grid, field):
    if not isinstance(entry, dict):
        raise ConfigError(field, "expected an object")
    if 'preset' in entry:
        name = entry['preset']
        u = clean_numeric_value(entry['u'], f"{field}.u") if 'u' in entry else None
        try:
            return preset_function(name, grid, u)
        except BridgeError as e:
            raise ConfigError(f"{field}.preset", str(e))
    if 'values' in entry:
        values = clean_numeric_list(entry['values'], f"{field}.values")
        if len(values) != grid.n + 1:
            # 按均匀网格取值, 插值到当前网格
            nodes = np.linspace(0.0, grid.T, len(values))
            values = np.interp(grid.times, nodes, values)
        return GridFunction(grid, values, 'values')
    raise ConfigError(field, "expected 'preset' or 'values'")


def load_conditioning(source, grid, field='conditioning'):
    doc = _as_document(source, field)
    functions = _require(doc, 'functions', field)
    if not isinstance(functions, list) or not functions:
        raise ConfigError(f"{field}.functions", "expected a non-empty list")
    gs = [_function_entry(entry, grid, f"{field}.functions[{i}]") for i, entry in enumerate(functions)]
    y = clean_numeric_list(_require(doc, 'y', field), f"{field}.y")
    if len(y) != len(gs):
        raise ConfigError(f"{field}.y", f"expected {len(gs)} targets, got {len(y)}")
    return ConditioningSet(gs, y)


def load_market(source, grid_n=None, default_n=None, field='market'):
    """Parse market.json; returns (MarketSpec, ModelConfig)."""
    doc = _as_document(source, field)
    model_config = load_model(_require(doc, 'model', field), f"{field}.model")
    grid = make_uniform_grid(model_config.model.T, model_config.grid_n(grid_n, default_n))
    cond = load_conditioning(_require(doc, 'conditioning', field), grid, f"{field}.conditioning")
    a_doc = _require(doc, 'a', field)
    if not isinstance(a_doc, dict):
        raise ConfigError(f"{field}.a", "expected {'const': x} or {'values': [...]}")
    if 'const' in a_doc:
        a = GridFunction(grid, np.full(grid.n + 1, clean_numeric_value(a_doc['const'], f"{field}.a.const")), 'a')
    elif 'values' in a_doc:
        a = _function_entry({'values': a_doc['values']}, grid, f"{field}.a")
    else:
        raise ConfigError(f"{field}.a", "expected 'const' or 'values'")
    epsilon = clean_numeric_value(_require(doc, 'epsilon', field), f"{field}.epsilon")
    mu = clean_numeric_value(doc['mu'], f"{field}.mu") if 'mu' in doc else None
    sigma = clean_numeric_value(doc['sigma'], f"{field}.sigma") if 'sigma' in doc else None
    try:
        spec = MarketSpec(model_config.model, a, cond, epsilon, mu, sigma)
    except BridgeError as e:
        raise ConfigError(field, str(e))
    if not spec.epsilon_on_grid:
        LOGGER.warning("T - epsilon = %.17g is not a grid node; trading stops at t = %.17g "
                       "(effective epsilon %.17g)", grid.T - epsilon, grid.times[spec.stop_index],
                       spec.effective_epsilon)
    return spec, model_config
