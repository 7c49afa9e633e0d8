"""Hybrid quantum-classical LSTM workbench.

Subpackages: statevec (dense simulator), vqc (variational circuit block and
gradient engines), autodiff (reverse-mode tape), models (QLSTM and classical
LSTM cells), data (generators and windowing), train (RMSprop loop and
checkpoints), cli (experiment runner).
"""

__version__ = "0.1.0"
