"""
Constantes de treino, geometria da rede e mensagens padronizadas.
Centraliza os valores de referência da escala completa e as convenções da escala de bancada.
"""

# ============================================================================
# VALORES DE REFERÊNCIA (TREINO)
# ============================================================================

TAU_PADRAO = 0.1
TAXA_APRENDIZADO_PADRAO = 1e-3
ITERACOES_PADRAO = 10000
LOTE_IMAGENS_PADRAO = 40
REGIOES_POR_MAPA_PADRAO = 13           # A
TAMANHO_REGIAO_PADRAO = 3              # K
PARTICOES_PADRAO = 4                   # S
BLOCOS_DECODER_PRE_TREINADOS = 3       # l
LAMBDA_LOCAL_PADRAO = 1.0
INTERVALO_VALIDACAO_PADRAO = 50

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# ============================================================================
# REDE (ESCALA COMPLETA)
# ============================================================================

BLOCOS_ENCODER_COMPLETO = 6
CANAIS_BASE_COMPLETO = 16
MULTIPLICADOR_MAXIMO_CANAIS = 8
DIMENSOES_G1_COMPLETO = (3200, 128)
TAMANHO_ENTRADA_COMPLETO = (192, 192)

# ============================================================================
# ESTRATÉGIAS
# ============================================================================

ESTRATEGIAS_GLOBAIS = ("GR", "GDminus", "GD")
ESTRATEGIAS_LOCAIS = ("none", "LR", "LD")

# Ordenação de referência (ACDC, |X_tr| = 1): random < G^R < G^D < G^D + L^R
ORDENACAO_REFERENCIA_ACDC_XTR1 = {
    "random": 0.614,
    "GR": 0.631,
    "GD": 0.691,
    "GD+LR": 0.725,
}

# ============================================================================
# DICE
# ============================================================================

# Suavização do Dice suave na perda de segmentação
SUAVIZACAO_DICE = 1.0


class MensagensErro:
    """Mensagens de erro padronizadas."""

    # Formato .vol
    VOL_MAGIC_INVALIDO = "Magic invalido: esperado {esperado!r}, encontrado {encontrado!r}"
    VOL_VERSAO_INVALIDA = "Versao de formato nao suportada: {versao}"
    VOL_TRUNCADO = "Arquivo truncado: esperados {esperado} bytes, encontrados {encontrado}"
    VOL_FORMA_INVALIDA = "Forma invalida: D={d}, H={h}, W={w} (todas devem ser >= 1)"
    VOL_ESPACAMENTO_INVALIDO = "Espacamento invalido: {espacamento} (componentes devem ser > 0)"
    VOL_FLAG_ROTULOS = "Flag has_labels invalida: {valor} (esperado 0 ou 1)"
    VOL_BYTES_EXCEDENTES = "Bytes excedentes apos o payload: {excedente}"

    # Volume
    VOLUME_FORMAS_DIFERENTES = "voxels {voxels} e rotulos {rotulos} com formas diferentes"
    VOLUME_NAO_FINITO = "Volume '{id}' contem voxels nao finitos"
    VOLUME_DEGENERADO = "Volume '{id}' degenerado: percentil 99 == percentil 1 ({valor})"

    # Partições e estratégias
    PARTICOES_INVALIDAS = "Particao invalida: S={s} para D={d} (exige 1 <= S <= D)"
    GR_POUCAS_IMAGENS = "G^R exige N >= 2 imagens (recebido N={n}); sem negativos disponiveis"
    GD_POUCAS_PARTICOES = "G^D/G^D- exigem S >= 2 (recebido S={s}); Lambda- ficaria vazio"
    GD_POUCOS_VOLUMES = "m={m} volumes solicitados, mas apenas {disponiveis} disponiveis"
    GRADE_CAPACIDADE = "A={a} regioes excede a capacidade da grade ({capacidade} celulas de {k}x{k})"
    GRADE_K_INVALIDO = "K={k} invalido para mapa {w1}x{w2}"
    LD_SEM_PARES = "L^D exige >= 2 volumes compartilhando uma particao no lote"
    NEGATIVOS_VAZIOS = "Conjunto de negativos vazio para o par positivo {indice}"

    # Treino
    LOTE_PEQUENO_GD = "batch_images={lote} < {minimo} (m seria 0 para S={s})"
    TREINO_VAZIO = "X_tr vazio: nada para ajustar"
    CLASSES_EXCEDENTES = "Rotulo {rotulo} excede num_classes={num_classes} no volume '{id}'"
    PERDA_NAO_FINITA = "Perda nao finita na iteracao {iteracao} do estagio {estagio}"
