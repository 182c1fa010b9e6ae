import json
import logging
import sys

import numpy as np
import pandas as pd

from config import CLI_CONFIG

LOGGER = logging.getLogger(__name__)


def create_paths_table(grid, values):
    """路径表: 第一列 time, 之后每条路径一列"""
    values = np.atleast_2d(values)
    table = pd.DataFrame({'time': grid.times})
    for i, row in enumerate(values):
        table[f'path_{i}'] = row
    return table


def create_gram_table(grid, gram):
    """t, 各矩阵元素, det"""
    table = pd.DataFrame({'t': grid.times})
    N = gram.N
    for i in range(N):
        for j in range(i, N):
            table[f'gram_{i}{j}'] = gram.matrices[:, i, j]
    table['det'] = gram.dets
    return table


def create_residual_table(rows, columns):
    if not rows:
        LOGGER.warning("empty table for columns %s", columns)
    return pd.DataFrame(rows, columns=columns)


def write_table(table, out=None):
    """写出 CSV; out 为空时写到标准输出"""
    target = sys.stdout if out in (None, '-') else out
    table.to_csv(target, index=False, float_format=CLI_CONFIG['float_format'])
    if target is not sys.stdout:
        LOGGER.info("wrote %d rows to %s", len(table), out)


def _format_float(value):
    if value is None:
        return None
    return float(CLI_CONFIG['float_format'] % value)


def write_json(payload, out=None):
    """JSON 输出; 浮点数按 17 位有效数字"""
    cleaned = {key: _format_float(value) if isinstance(value, float) else value
               for key, value in payload.items()}
    text = json.dumps(cleaned, indent=2)
    if out in (None, '-'):
        print(text)
    else:
        with open(out, 'w', encoding='utf-8') as handle:
            handle.write(text + '\n')
        LOGGER.info("wrote %s", out)
