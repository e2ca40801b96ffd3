import pytest

from yulebst.tree_core import BinaryTree, NodeWord


def word(text: str) -> NodeWord:
    return NodeWord.parse(text)


@pytest.fixture
def tree_n2_left():
    """Root split, then its left child."""
    t = BinaryTree()
    t.split(word(""))
    t.split(word("0"))
    return t
