"""Reference values of the standard normal cdf, computed at 40 digits with mpmath."""

NORMAL_CDF_TABLE = (
    (-10.0, '7.619853024160526066e-24'),
    (-9.75, '9.2234135249394181485e-23'),
    (-9.5, '1.0494515075362607493e-21'),
    (-9.375, '3.4587884872335800397e-21'),
    (-9.25, '1.122463359132798266e-20'),
    (-9.0, '1.1285884059538406477e-19'),
    (-8.75, '1.0667637375474858003e-18'),
    (-8.5, '9.4795348222033183542e-18'),
    (-8.25, '7.919726314642477341e-17'),
    (-8.0, '6.2209605742717841235e-16'),
    (-7.75, '4.5946274357785954602e-15'),
    (-7.5, '3.1908916729108962278e-14'),
    (-7.25, '2.0838581586720694312e-13'),
    (-7.0, '1.2798125438858350044e-12'),
    (-6.75, '7.3922577780178224195e-12'),
    (-6.5, '4.0160005838591178083e-11'),
    (-6.25, '2.0522634252189388816e-10'),
    (-6.123, '4.5914847411119091659e-10'),
    (-6.0, '9.865876450376981407e-10'),
    (-5.75, '4.4621724539016118731e-9'),
    (-5.5, '1.8989562465887719384e-8'),
    (-5.25, '7.6049605164887142511e-8'),
    (-5.0, '2.8665157187919391167e-7'),
    (-4.75, '1.0170832425687031713e-6'),
    (-4.5, '3.3976731247300604017e-6'),
    (-4.25, '0.000010688525774934420469'),
    (-4.0, '0.000031671241833119921254'),
    (-3.75, '0.000088417285200803867818'),
    (-3.5, '0.00023262907903552503635'),
    (-3.25, '0.00057702504239076704292'),
    (-3.0, '0.0013498980316300945267'),
    (-2.75, '0.0029797632350545567543'),
    (-2.5, '0.006209665325776135167'),
    (-2.25, '0.012224472655044703153'),
    (-2.0, '0.0227501319481792072'),
    (-1.96, '0.024997895148220436213'),
    (-1.75, '0.040059156863817090419'),
    (-1.5, '0.066807201268858066004'),
    (-1.25, '0.10564977366685525769'),
    (-1.0, '0.15865525393145705141'),
    (-0.75, '0.22662735237686819933'),
    (-0.5, '0.30853753872598689636'),
    (-0.3141592653589793, '0.37670003953618587391'),
    (-0.25, '0.40129367431707627576'),
    (0.0, '0.5'),
    (0.25, '0.59870632568292372424'),
    (0.5, '0.69146246127401310364'),
    (0.6744897501960817, '0.749999999999999988'),
    (0.75, '0.77337264762313180067'),
    (1.0, '0.84134474606854294859'),
    (1.25, '0.89435022633314474231'),
    (1.5, '0.933192798731141934'),
    (1.6448536269514722, '0.94999999999999994607'),
    (1.75, '0.95994084313618290958'),
    (2.0, '0.9772498680518207928'),
    (2.25, '0.98777552734495529685'),
    (2.5, '0.99379033467422386483'),
    (2.5758293035489004, '0.99499999999999999455'),
    (2.75, '0.99702023676494544325'),
    (3.0, '0.99865010196836990547'),
    (3.090232306167814, '0.99900000000000000181'),
    (3.25, '0.99942297495760923296'),
    (3.5, '0.99976737092096447496'),
    (3.75, '0.99991158271479919613'),
    (4.0, '0.99996832875816688008'),
    (4.25, '0.99998931147422506558'),
    (4.5, '0.99999660232687526994'),
    (4.75, '0.9999989829167574313'),
    (5.0, '0.99999971334842812081'),
    (5.25, '0.99999992395039483511'),
    (5.5, '0.99999998101043753411'),
    (5.75, '0.9999999955378275461'),
    (6.0, '0.99999999901341235496'),
    (6.25, '0.99999999979477365748'),
    (6.5, '0.99999999995983999416'),
    (6.75, '0.99999999999260774222'),
    (7.0, '0.99999999999872018746'),
    (7.25, '0.99999999999979161418'),
    (7.5, '0.99999999999996809108'),
    (7.7, '0.99999999999999319669'),
    (7.75, '0.99999999999999540537'),
    (8.0, '0.9999999999999993779'),
    (8.25, '0.9999999999999999208'),
    (8.5, '0.99999999999999999052'),
    (8.75, '0.99999999999999999893'),
    (9.0, '0.99999999999999999989'),
    (9.25, '0.99999999999999999999'),
    (9.5, '1.0'),
    (9.75, '1.0'),
    (10.0, '1.0'),
)
