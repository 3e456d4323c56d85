"""Prescribed mean curvature graphs in warped-product spacetimes -dt^2 + f(t)^2 g.

Modules
-------
fiber       discrete compact fibers (circle, flat torus, icosphere) and operators
warp        warping functions and the Hubble / NCC / Einstein condition reports
graphgeo    spacelike graphs: normal, shape operator, mean curvatures, action
identities  refinement-ladder checks of geometric identities, theorem classifier
solver      Newton-Krylov and pseudo-transient solver for H(u) = f'(u)/f(u)
cli         the ``grwlab`` command
"""
__version__ = "0.1.0"
