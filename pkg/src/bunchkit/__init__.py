"""Proof search, checking and transformation for propositional BI."""
