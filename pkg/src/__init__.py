"""
Diversifying regularization for RBM/DBN pretraining, sigmoid networks and VAEs
"""

__version__ = "0.1.0"
