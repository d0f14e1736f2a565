"""Simulation of ECM memristive crossbars that learn through the
short-term to long-term plasticity transition."""
from .crossbar import Crossbar, VariabilitySpec, build_crossbar
from .datasets import PatternSet, add_noise, load_mnist, make_glyphs
from .device import DeviceParams, DeviceState, apply_spike, relaxed_conductance, step_no_spike
from .elm import (ActivationBank, CrossbarELMClassifier, DirectRidgeClassifier,
                  ReadoutModel, map_weights_to_conductance_pairs, project, solve_readout)
from .signature import SignatureClassifier, SignatureRegister, classify, evaluate, train_register

__version__ = "0.1.0"

__all__ = [
    "ActivationBank", "Crossbar", "CrossbarELMClassifier", "DeviceParams", "DeviceState",
    "DirectRidgeClassifier", "PatternSet", "ReadoutModel", "SignatureClassifier",
    "SignatureRegister", "VariabilitySpec", "add_noise", "apply_spike", "build_crossbar",
    "classify", "evaluate", "load_mnist", "make_glyphs", "map_weights_to_conductance_pairs",
    "project", "relaxed_conductance", "solve_readout", "step_no_spike", "train_register",
]
