"""Continuous-time random walks with correlated heavy-tailed innovations."""
