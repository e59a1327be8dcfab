"""Few-bit ADC MIMO channel estimation: linear baselines, DNN estimator, pilot autoencoder."""

__version__ = "0.1.0"
