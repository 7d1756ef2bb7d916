"""Frozen reference values; regenerate with make_reference_values.py."""

SQUARE_WELL = {'x': {(0, 0): -1.811545866355885e-37,
       (0, 1): -0.9965175219518393,
       (0, 2): -2.1513241717665414e-37,
       (0, 3): -0.07972140175614714,
       (0, 4): -2.8660142097834844e-38,
       (0, 5): -0.021964059667509927,
       (1, 1): -2.1415695687183066e-37,
       (1, 2): -1.0762389237079864,
       (1, 3): 1.3005100441791144e-37,
       (1, 4): -0.10168546142365707,
       (1, 5): -3.7470778916854556e-38,
       (2, 2): -2.346533365603181e-37,
       (2, 3): -1.0982029833754963,
       (2, 4): -8.309593681007778e-38,
       (2, 5): -0.11072416910575993,
       (3, 3): 1.759498438243303e-38,
       (3, 4): -1.1072416910575993,
       (3, 5): -4.258018996650105e-37,
       (4, 4): -1.987140488622403e-37,
       (4, 5): -1.111817069946267,
       (5, 5): -6.611563179047412e-37},
 'x2': [1.0,
        2.162909572547823,
        2.378263197093716,
        2.4536369656847787,
        2.4885242528612133,
        2.507475371821252],
 'xi': 0.180756027595664}

MORSE_A7 = {'x': {(0, 0): 0.3998420538472177,
       (0, 1): 0.9774300516612519,
       (0, 2): -0.196876345724165,
       (0, 5): 0.015390531912017825,
       (1, 1): 1.310752278360063,
       (1, 2): 1.4365229314993608,
       (1, 5): -0.07292088525164887,
       (2, 2): 2.4377804188847794,
       (2, 5): 0.25132633369643226,
       (5, 5): 9.197652849702374},
 'x2': {0: 1.1598736680247614,
        1: 4.905874881547882,
        2: 11.84559983591361,
        5: 105.94860814619601},
 'xi': 0.2827674458407897}

MORSE_A30 = {'x': {(0, 0): 0.1935532339475477,
       (0, 1): 0.9956178045811507,
       (0, 10): -2.9872226977443836e-06,
       (0, 28): -4.984477319869524e-10,
       (1, 1): 0.5914851910691281,
       (1, 10): 2.5580990802624857e-05,
       (1, 28): 4.032661400972251e-09,
       (10, 10): 5.11937986025755,
       (10, 28): -0.00023325539438903743,
       (28, 28): 41.03846992849993},
 'x2': {0: 1.037462854371554,
        1: 3.3851512060516753,
        10: 52.518332238785455,
        28: 1844.058219980629},
 'xi': 0.13074249840637134}

INTERNAL_PARAMS = {'cos_phi': 0.8, 'delta': -0.7, 'eta': 0.1, 'omega': 0.6}

INTERNAL_OMEGAS = [-3.0, -0.4, 0.1, 0.25, 1.7, 6.0]

INTERNAL = {'q': [(-0.00014601698334967567+0.00018730022761518695j),
       (-0.005885572412676195+0.004050601245871683j),
       (-0.004254618477536387+0.001399871237922446j),
       (-0.0037630909351422178+0.0008496664949350257j),
       (0.00011275882371187417-0.00041725382251840085j),
       (8.649505355055794e-06-1.2921155727716903e-05j)],
 'r': [(-0.004578329754658549+0.00039267183537080425j),
       (-0.016920603154588727+0.006359498180934799j),
       (-0.01836546723516467+0.015151826135238489j),
       (-0.018139482595495228+0.018882437833352403j),
       (0.016738879406421842+0.01141092104146569j),
       (0.0038120644541641837+0.0003953904177345454j)],
 'rho': [(0.9021739130434783+5.579901837112307e-17j),
         (-0.22826086956521732+0.1630434782608693j),
         (0.09782608695652176-5.579901837112307e-17j)],
 's': [(1.6769046926306633e-05-0.000147373340906259j),
       (0.00015258110601477286-0.0005281208391414242j),
       (0.00034745262498266593+0.00016277317721215696j),
       (0.00044275931212107295-0.00021167065539685876j),
       (0.0003011491862360342+0.00046158386359338317j),
       (1.1125891961719347e-05+0.00011030972313823769j)]}

