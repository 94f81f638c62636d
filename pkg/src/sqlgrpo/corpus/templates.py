"""Hand-written question templates, one per (pattern, language).

Identifiers and literal values are copied into the questions verbatim, so a
question always carries the names the SQL needs. Placeholders:

    {c} selected column      {t} table           {n} numeric column
    {tc} text column         {val} text value    {cmp} comparison phrase
    {g} grouping column      {cnt} count phrase  {k} limit
    {a} {b} range bounds     {s} substring       {dir} direction word
    {p} parent table         {ch} child table    {label} parent label column
    {x} counted child column
"""

CMP = {
    ">": {"vi": "lớn hơn {v}", "es": "mayor que {v}", "ja": "{v} より大きい", "de": "größer als {v}",
          "en": "greater than {v}", "zh": "大于 {v}", "fr": "supérieur à {v}"},
    ">=": {"vi": "ít nhất {v}", "es": "al menos {v}", "ja": "{v} 以上", "de": "mindestens {v}",
           "en": "at least {v}", "zh": "至少 {v}", "fr": "au moins {v}"},
    "<": {"vi": "nhỏ hơn {v}", "es": "menor que {v}", "ja": "{v} 未満", "de": "kleiner als {v}",
          "en": "less than {v}", "zh": "小于 {v}", "fr": "inférieur à {v}"},
    "<=": {"vi": "không quá {v}", "es": "como máximo {v}", "ja": "{v} 以下", "de": "höchstens {v}",
           "en": "at most {v}", "zh": "不超过 {v}", "fr": "au plus {v}"},
    "=": {"vi": "bằng {v}", "es": "igual a {v}", "ja": "{v} と等しい", "de": "gleich {v}",
          "en": "equal to {v}", "zh": "等于 {v}", "fr": "égal à {v}"},
    "!=": {"vi": "khác {v}", "es": "distinto de {v}", "ja": "{v} と異なる", "de": "ungleich {v}",
           "en": "different from {v}", "zh": "不等于 {v}", "fr": "différent de {v}"},
}

# count thresholds for HAVING
COUNT_CMP = {
    ">": {"vi": "nhiều hơn {v}", "es": "más de {v}", "ja": "{v} 件より多い", "de": "mehr als {v}",
          "en": "more than {v}", "zh": "超过 {v}", "fr": "plus de {v}"},
    ">=": {"vi": "ít nhất {v}", "es": "al menos {v}", "ja": "{v} 件以上", "de": "mindestens {v}",
           "en": "at least {v}", "zh": "至少 {v}", "fr": "au moins {v}"},
}

AGG = {
    "AVG": {"vi": "trung bình", "es": "promedio", "ja": "平均値", "de": "durchschnittliche",
            "en": "average", "zh": "平均值", "fr": "moyenne"},
    "MAX": {"vi": "lớn nhất", "es": "máximo", "ja": "最大値", "de": "maximale",
            "en": "maximum", "zh": "最大值", "fr": "maximale"},
    "MIN": {"vi": "nhỏ nhất", "es": "mínimo", "ja": "最小値", "de": "minimale",
            "en": "minimum", "zh": "最小值", "fr": "minimale"},
    "SUM": {"vi": "tổng cộng", "es": "total", "ja": "合計", "de": "gesamte",
            "en": "total", "zh": "总和", "fr": "totale"},
}

ORDER_DIR = {
    "DESC": {"vi": "cao nhất", "es": "alto", "ja": "最も高い", "de": "höchsten",
             "en": "highest", "zh": "最高", "fr": "élevé"},
    "ASC": {"vi": "thấp nhất", "es": "bajo", "ja": "最も低い", "de": "niedrigsten",
            "en": "lowest", "zh": "最低", "fr": "bas"},
}

AVG_DIR = {
    ">": {"vi": "cao hơn", "es": "por encima del", "ja": "より大きい", "de": "über dem",
          "en": "above", "zh": "高于", "fr": "supérieur à"},
    "<": {"vi": "thấp hơn", "es": "por debajo del", "ja": "より小さい", "de": "unter dem",
          "en": "below", "zh": "低于", "fr": "inférieur à"},
}

QUESTIONS = {
    "list": {
        "vi": "Hiển thị {c} của mỗi {t}.",
        "es": "Muestra el {c} de cada {t}.",
        "ja": "すべての {t} の {c} を表示してください。",
        "de": "Zeige den {c} jedes {t}.",
        "en": "Show the {c} of every {t}.",
        "zh": "显示每个 {t} 的 {c}。",
        "fr": "Affiche le {c} de chaque {t}.",
    },
    "count_all": {
        "vi": "Có bao nhiêu bản ghi {t}?",
        "es": "¿Cuántos registros de {t} hay?",
        "ja": "{t} のレコードはいくつありますか?",
        "de": "Wie viele {t} Einträge gibt es?",
        "en": "How many {t} records are there?",
        "zh": "{t} 有多少条记录?",
        "fr": "Combien d'enregistrements {t} y a-t-il ?",
    },
    "where_num": {
        "vi": "Hiển thị {c} của mỗi {t} có {n} {cmp}.",
        "es": "Muestra el {c} de cada {t} cuyo {n} es {cmp}.",
        "ja": "{n} が {cmp} {t} の {c} を表示してください。",
        "de": "Zeige den {c} jedes {t}, dessen {n} {cmp} ist.",
        "en": "Show the {c} of every {t} whose {n} is {cmp}.",
        "zh": "显示 {n} {cmp} 的 {t} 的 {c}。",
        "fr": "Affiche le {c} de chaque {t} dont le {n} est {cmp}.",
    },
    "where_text": {
        "vi": "Hiển thị {c} của mỗi {t} có {tc} là '{val}'.",
        "es": "Muestra el {c} de cada {t} cuyo {tc} es '{val}'.",
        "ja": "{tc} が '{val}' である {t} の {c} を表示してください。",
        "de": "Zeige den {c} jedes {t}, dessen {tc} '{val}' ist.",
        "en": "Show the {c} of every {t} whose {tc} is '{val}'.",
        "zh": "显示 {tc} 为 '{val}' 的 {t} 的 {c}。",
        "fr": "Affiche le {c} de chaque {t} dont le {tc} est '{val}'.",
    },
    "distinct": {
        "vi": "Liệt kê các giá trị {c} khác nhau của {t}.",
        "es": "Enumera los valores distintos de {c} en {t}.",
        "ja": "{t} の {c} の異なる値を一覧表示してください。",
        "de": "Liste die verschiedenen Werte von {c} in {t} auf.",
        "en": "List the distinct {c} values of {t}.",
        "zh": "列出 {t} 中 {c} 的不同取值。",
        "fr": "Liste les valeurs distinctes de {c} dans {t}.",
    },
    "agg": {
        "vi": "Giá trị {agg} của {n} trong {t} là bao nhiêu?",
        "es": "¿Cuál es el valor {agg} de {n} en {t}?",
        "ja": "{t} の {n} の{agg}はいくつですか?",
        "de": "Was ist der {agg} Wert von {n} in {t}?",
        "en": "What is the {agg} {n} of {t}?",
        "zh": "{t} 中 {n} 的{agg}是多少?",
        "fr": "Quelle est la valeur {agg} de {n} dans {t} ?",
    },
    "order_limit": {
        "vi": "Hiển thị {c} của {k} bản ghi {t} có {n} {dir}.",
        "es": "Muestra el {c} de los {k} registros de {t} con el {n} más {dir}.",
        "ja": "{n} が{dir} {k} 件の {t} の {c} を表示してください。",
        "de": "Zeige den {c} der {k} {t} Einträge mit dem {dir} {n}.",
        "en": "Show the {c} of the {k} {t} records with the {dir} {n}.",
        "zh": "显示 {n} {dir}的 {k} 条 {t} 记录的 {c}。",
        "fr": "Affiche le {c} des {k} enregistrements {t} avec le {n} le plus {dir}.",
    },
    "count_distinct": {
        "vi": "Có bao nhiêu giá trị {c} khác nhau trong {t}?",
        "es": "¿Cuántos valores diferentes de {c} hay en {t}?",
        "ja": "{t} には異なる {c} の値がいくつありますか?",
        "de": "Wie viele verschiedene Werte von {c} gibt es in {t}?",
        "en": "How many different {c} values are there in {t}?",
        "zh": "{t} 中有多少个不同的 {c}?",
        "fr": "Combien de valeurs différentes de {c} y a-t-il dans {t} ?",
    },
    "group_count": {
        "vi": "Với mỗi {g}, có bao nhiêu bản ghi {t}?",
        "es": "Para cada {g}, ¿cuántos registros de {t} hay?",
        "ja": "各 {g} ごとに {t} のレコードはいくつありますか?",
        "de": "Wie viele {t} Einträge gibt es für jeden {g}?",
        "en": "For each {g}, how many {t} records are there?",
        "zh": "每个 {g} 各有多少条 {t} 记录?",
        "fr": "Pour chaque {g}, combien d'enregistrements {t} y a-t-il ?",
    },
    "group_having": {
        "vi": "Những giá trị {g} nào xuất hiện trong {cnt} bản ghi {t}?",
        "es": "¿Qué valores de {g} aparecen en {cnt} registros de {t}?",
        "ja": "{t} のレコード数が {cnt} {g} の値はどれですか?",
        "de": "Welche {g} Werte kommen in {cnt} {t} Einträgen vor?",
        "en": "Which {g} values appear in {cnt} {t} records?",
        "zh": "哪些 {g} 在 {t} 中出现了{cnt}次?",
        "fr": "Quelles valeurs de {g} apparaissent dans {cnt} enregistrements {t} ?",
    },
    "join_having_distinct": {
        "vi": "Hiển thị {label} của mỗi {p} có {cnt} {x} khác nhau trong {ch}.",
        "es": "Muestra el {label} de cada {p} con {cnt} {x} diferentes en {ch}.",
        "ja": "{ch} で異なる {x} が {cnt} {p} の {label} を表示してください。",
        "de": "Zeige den {label} jedes {p} mit {cnt} verschiedenen {x} in {ch}.",
        "en": "Show the {label} of every {p} with {cnt} different {x} in {ch}.",
        "zh": "显示在 {ch} 中有{cnt}个不同 {x} 的 {p} 的 {label}。",
        "fr": "Affiche le {label} de chaque {p} ayant {cnt} {x} différents dans {ch}.",
    },
    "join_having_count": {
        "vi": "Hiển thị {label} của mỗi {p} có {cnt} bản ghi {ch}.",
        "es": "Muestra el {label} de cada {p} con {cnt} registros de {ch}.",
        "ja": "{ch} のレコードが {cnt} {p} の {label} を表示してください。",
        "de": "Zeige den {label} jedes {p} mit {cnt} {ch} Einträgen.",
        "en": "Show the {label} of every {p} with {cnt} {ch} records.",
        "zh": "显示有{cnt}条 {ch} 记录的 {p} 的 {label}。",
        "fr": "Affiche le {label} de chaque {p} ayant {cnt} enregistrements {ch}.",
    },
    "join_where": {
        "vi": "Hiển thị các {label} khác nhau của {p} có bản ghi {ch} với {n} {cmp}.",
        "es": "Muestra los {label} distintos de {p} que tienen un registro de {ch} cuyo {n} es {cmp}.",
        "ja": "{n} が {cmp} {ch} のレコードを持つ {p} の異なる {label} を表示してください。",
        "de": "Zeige die verschiedenen {label} von {p} mit einem {ch} Eintrag, dessen {n} {cmp} ist.",
        "en": "Show the distinct {label} of {p} that have a {ch} record whose {n} is {cmp}.",
        "zh": "显示拥有 {n} {cmp} 的 {ch} 记录的 {p} 的不同 {label}。",
        "fr": "Affiche les {label} distincts de {p} ayant un enregistrement {ch} dont le {n} est {cmp}.",
    },
    "not_in": {
        "vi": "Hiển thị {label} của mỗi {p} không có bản ghi {ch} nào với {n} {cmp}.",
        "es": "Muestra el {label} de cada {p} que no tiene ningún registro de {ch} cuyo {n} es {cmp}.",
        "ja": "{n} が {cmp} {ch} のレコードを持たない {p} の {label} を表示してください。",
        "de": "Zeige den {label} jedes {p}, der keinen {ch} Eintrag hat, dessen {n} {cmp} ist.",
        "en": "Show the {label} of every {p} that has no {ch} record whose {n} is {cmp}.",
        "zh": "显示没有 {n} {cmp} 的 {ch} 记录的 {p} 的 {label}。",
        "fr": "Affiche le {label} de chaque {p} qui n'a aucun enregistrement {ch} dont le {n} est {cmp}.",
    },
    "like": {
        "vi": "Hiển thị {c} của mỗi {t} có {tc} chứa '{s}'.",
        "es": "Muestra el {c} de cada {t} cuyo {tc} contiene '{s}'.",
        "ja": "{tc} に '{s}' を含む {t} の {c} を表示してください。",
        "de": "Zeige den {c} jedes {t}, dessen {tc} '{s}' enthält.",
        "en": "Show the {c} of every {t} whose {tc} contains '{s}'.",
        "zh": "显示 {tc} 包含 '{s}' 的 {t} 的 {c}。",
        "fr": "Affiche le {c} de chaque {t} dont le {tc} contient '{s}'.",
    },
    "between": {
        "vi": "Hiển thị {c} của mỗi {t} có {n} nằm trong khoảng từ {a} đến {b}.",
        "es": "Muestra el {c} de cada {t} cuyo {n} está entre {a} y {b}.",
        "ja": "{n} が {a} から {b} の間にある {t} の {c} を表示してください。",
        "de": "Zeige den {c} jedes {t}, dessen {n} zwischen {a} und {b} liegt.",
        "en": "Show the {c} of every {t} whose {n} is between {a} and {b}.",
        "zh": "显示 {n} 介于 {a} 和 {b} 之间的 {t} 的 {c}。",
        "fr": "Affiche le {c} de chaque {t} dont le {n} est entre {a} et {b}.",
    },
    "vs_avg": {
        "vi": "Hiển thị {c} của mỗi {t} có {n} {dir} giá trị trung bình của {n}.",
        "es": "Muestra el {c} de cada {t} cuyo {n} está {dir} promedio de {n}.",
        "ja": "{n} が {n} の平均{dir} {t} の {c} を表示してください。",
        "de": "Zeige den {c} jedes {t}, dessen {n} {dir} Durchschnitt von {n} liegt.",
        "en": "Show the {c} of every {t} whose {n} is {dir} the average {n}.",
        "zh": "显示 {n} {dir} {n} 平均值的 {t} 的 {c}。",
        "fr": "Affiche le {c} de chaque {t} dont le {n} est {dir} la moyenne de {n}.",
    },
    "count_where": {
        "vi": "Có bao nhiêu bản ghi {t} có {n} {cmp}?",
        "es": "¿Cuántos registros de {t} tienen un {n} {cmp}?",
        "ja": "{n} が {cmp} {t} のレコードはいくつありますか?",
        "de": "Wie viele {t} Einträge haben einen {n} {cmp}?",
        "en": "How many {t} records have a {n} {cmp}?",
        "zh": "{n} {cmp} 的 {t} 记录有多少条?",
        "fr": "Combien d'enregistrements {t} ont un {n} {cmp} ?",
    },
}
