"""Relation classification over augmented dependency paths.

A dependency parse plus two entity mentions is reduced to the shortest
path between the entity head words, with each path word carrying the
subtree hanging off it. A recursive encoder turns each attached subtree
into a vector, a convolution with max-over-time pooling turns the
word/relation path into a fixed-size representation, and a softmax layer
predicts one of the 19 relation labels.
"""

__version__ = "0.1.0"
