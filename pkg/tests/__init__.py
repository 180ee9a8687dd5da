"""
Tests Package - Unit and Acceptance Tests
=========================================

1. test_autodiff.py - primitives, gradients, Adam, checkpoints
2. test_encoders.py - lstm, lstm_narx, lstm_lag and wavenet encoders
3. test_decoder.py - global/local MLPs, grids, log-Gaussian head
4. test_training.py - losses, forking/cutting equivalence, trainer
5. test_data.py - schema, ingestion, features, normalisation, synthetic data
6. test_evaluation.py - metrics, interpolation, rolling evaluation, bands
7. test_cli.py - configuration and the command-line front door
8. test_acceptance.py - desk-scale runs (marked slow)
"""

__version__ = "1.0.0"
