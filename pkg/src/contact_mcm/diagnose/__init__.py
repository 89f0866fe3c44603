"""
Checks on solver output: graph reconstruction, free-boundary identities, evolution-equation
residuals and the maximum-principle bounds monitored over a run.
"""
