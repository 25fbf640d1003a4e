"""Informer: ProbSparse 자기 어텐션 + 생성형 디코더.

인코더 층 사이의 distilling(합성곱 풀링)은 쓰지 않는다.
"""

from attention.full import AttentionKernel
from attention.prob_sparse import prob_sparse_kernel
from models.base import ModelKind
from models.vanilla import VanillaTransformer


class Informer(VanillaTransformer):
    kind = ModelKind.INFORMER

    def attention_kernel(self) -> AttentionKernel:
        return prob_sparse_kernel(self.spec.prob_sparse)
