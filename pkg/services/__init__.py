"""Services module for training, inference, evaluation and orchestration."""
