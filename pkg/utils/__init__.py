# 使utils成为Python包
from .loaders import (ModelConfig, clean_numeric_value, clean_numeric_list, read_json, load_model,
                      load_conditioning, load_market)
from .reports import create_paths_table, create_gram_table, create_residual_table, write_table, write_json
