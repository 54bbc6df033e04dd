import pytest

from foodquiz import canonical
from foodquiz.features import FeatureId
from foodquiz.forest import DecisionNode, Forest, ForestParams
from foodquiz.quizkit import TemplateBank, compile_quiz

FRUIT = FeatureId("word", "fruit")
COOK = FeatureId("hashtag", "#cook")
BRUNCH = FeatureId("word", "brunch")
CURRY = FeatureId("word", "curry")

OVERWEIGHT = True
NOT_OVERWEIGHT = False


def leaf(label: bool) -> DecisionNode:
    return DecisionNode(label=label, counts=(0, 0))


def published_tree() -> DecisionNode:
    """The published example tree: fruit>1 / #cook>0 / curry>1 / brunch>1."""
    return DecisionNode(
        feature=FRUIT,
        threshold=1,
        left=DecisionNode(
            feature=COOK,
            threshold=0,
            left=leaf(OVERWEIGHT),
            right=DecisionNode(
                feature=CURRY,
                threshold=1,
                left=leaf(NOT_OVERWEIGHT),
                right=leaf(OVERWEIGHT),
            ),
        ),
        right=DecisionNode(
            feature=BRUNCH,
            threshold=1,
            left=leaf(NOT_OVERWEIGHT),
            right=leaf(OVERWEIGHT),
        ),
    )


def make_forest(trees: list[DecisionNode], **param_overrides) -> Forest:
    params = ForestParams(n_trees=len(trees), **param_overrides)
    return Forest(
        params=params,
        trees=trees,
        fingerprint=canonical.fingerprint(
            {"trees": [t.to_dict() for t in trees], "params": params.to_dict()}
        ),
    )


COOK_OVERRIDE = {
    "hashtag:#cook": {"text": "What proportion of your meals are home cooked?"}
}


@pytest.fixture
def published_forest() -> Forest:
    return make_forest([published_tree()])


@pytest.fixture
def published_spec(published_forest):
    spec, _ = compile_quiz(published_forest, TemplateBank.default(), overrides=COOK_OVERRIDE)
    return spec
