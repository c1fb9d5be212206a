"""Vine copula regression for right-censored responses."""
