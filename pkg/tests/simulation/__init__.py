# Simulation tests package
