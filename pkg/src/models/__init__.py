"""Models: RBM, DBN stack, sigmoid MLP and VAE"""
