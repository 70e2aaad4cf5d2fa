from typing import Collection, Sequence, Tuple


def precision_recall_f1(predicted: Collection, reference: Collection) -> Tuple[float, float, float]:
    """
    Точность, полнота и F1 двух множеств.
    Пустое предсказание или пустой эталон дают нули.
    """
    predicted, reference = set(predicted), set(reference)
    overlap = len(predicted & reference)
    if not predicted or not reference or overlap == 0:
        return 0.0, 0.0, 0.0
    precision = overlap / len(predicted)
    recall = overlap / len(reference)
    return precision, recall, 2 * precision * recall / (precision + recall)


def precision_at_n(ranking: Sequence, gold: Collection, n: int) -> float:
    # Если рейтинг короче N, делим на фактическую длину
    top = list(ranking[:n])
    if not top:
        return 0.0
    return len(set(top) & set(gold)) / len(top)


def recall_at_n(ranking: Sequence, gold: Collection, n: int) -> float:
    gold = set(gold)
    if not gold:
        return 0.0
    return len(set(ranking[:n]) & gold) / len(gold)
