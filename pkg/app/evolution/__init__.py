"""NSGA-II training of policy genomes."""
