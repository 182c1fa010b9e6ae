# 数值计算配置
NUMERICS_CONFIG = {
    'jitter_delta': 1e-12,
    'jitter_escalations': 3,
    'jitter_factor': 10.0,
    'det_floor': 1e-300,
    'cond_max': 1e12,
    'node_tolerance': 1e-9,
    'pivot_floor': 1e-14
}

# Monte Carlo 配置
MC_CONFIG = {
    'chunk_size': 4096,
    'min_paths': 100,
    'threads_env': 'GB_THREADS'
}

# 命令行配置
CLI_CONFIG = {
    'prog': 'gbridge',
    'float_format': '%.17g',
    'log_format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    'exit_ok': 0,
    'exit_config': 2,
    'exit_numerical': 3
}

# 条件函数预设
PRESET_CONFIG = {
    'one': 'g(t) = 1',
    'avg': 'g(t) = (T - t) / T',
    'ind': 'g(t) = 1 on [0, u)'
}

# 默认参数
DEFAULTS = {
    'grid_n': 256,
    'paths': 1,
    'seed': 0,
    'stream_index': 0,
    'v0': 1.0,
    'mc_paths': 0
}
