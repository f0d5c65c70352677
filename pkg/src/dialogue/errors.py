class DialogueError(Exception):
    pass


class ProtocolError(DialogueError, ValueError):
    """对话行为超出 schema（未知意图或槽位）"""


class GoalGenerationError(DialogueError, ValueError):
    """知识库无法满足生成的用户目标"""
