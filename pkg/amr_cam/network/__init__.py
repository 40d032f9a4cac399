"""Clasificador de dos ramas: spotlight y compensación."""
