# 每个子命令一个模块
from . import bridge, insider_delta, sample, verify

COMMANDS = (sample, bridge, verify, insider_delta)
