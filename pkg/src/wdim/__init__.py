"""Weighted badly approximable points: exact Hausdorff-dimension bounds and a toy Cantor construction."""
