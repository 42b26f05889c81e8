# podsynth - decentralised privacy-preserving synthetic data generation
