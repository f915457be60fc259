"""Elite archive of distinct solutions and recombination of their clusters."""
