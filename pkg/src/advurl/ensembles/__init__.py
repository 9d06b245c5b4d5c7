"""From-scratch tree ensembles."""

from .grid import GRID, grid_search
from .models import (DEFAULTS, KINDS, EnsembleModel, predict, predict_proba, train, train_adaboost,
                     train_gradient_boost, train_random_forest, train_regularized_boost)
from .tree import DecisionTree, train_cart, train_regression_tree

__all__ = ["GRID", "grid_search", "DEFAULTS", "KINDS", "EnsembleModel", "predict", "predict_proba", "train",
           "train_adaboost", "train_gradient_boost", "train_random_forest", "train_regularized_boost",
           "DecisionTree", "train_cart", "train_regression_tree"]
