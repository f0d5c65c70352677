"""神经网络内核的异常定义"""


class NetworkError(Exception):
    """网络内核异常基类"""


class ShapeError(NetworkError, ValueError):
    """维度不匹配（配置错误）"""


class StaleCacheError(NetworkError, RuntimeError):
    """反向传播使用了过期或不匹配的前向缓存"""


class GradientCheckError(NetworkError, RuntimeError):
    """有限差分检查中出现非有限损失"""


class CheckpointError(NetworkError, ValueError):
    """参数检查点格式错误"""
