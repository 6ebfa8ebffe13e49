"""Experiment runner: configuration, curves, checkpoints, oracles and CLI"""
